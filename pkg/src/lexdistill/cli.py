"""Command-line interface: index building, retrieval, feedback pipelines,
synthetic collection generation and run evaluation."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .distill import TrainConfig
from .evaluation import MetricConfig, report_to_json, report_to_table
from .harness import (PipelineConfig, Query, SynthSpec, evaluate_run,
                      generate_synthetic, read_queries, run_pipeline,
                      write_run)
from .index import (Index, RankedList, SparseQuery, bm25_retrieve,
                    build_index, read_corpus)
from .prf import PrfConfig
from .report import write_report
from .scoring import HiddenLinearTeacher, QrelsOracleTeacher, RemoteTeacher
from .evaluation import read_qrels


def _cmd_index(args) -> int:
    index = build_index(read_corpus(args.corpus))
    index.save(args.index_dir)
    print(f"indexed {index.stats.n_docs} docs, "
          f"{len(index.inverted)} terms -> {args.index_dir}")
    return 0


def _cmd_retrieve(args) -> int:
    index = Index.load(args.index_dir)
    lists = []
    for query in read_queries(args.queries):
        try:
            sq = SparseQuery.from_text(query.text)
        except ValueError:
            print(f"warning: query {query.query_id} has no indexable terms",
                  file=sys.stderr)
            continue
        rl = bm25_retrieve(index, sq, args.k)
        rl.query_id = query.query_id
        lists.append(rl)
    write_run(args.output, lists, tag=args.tag)
    print(f"wrote {len(lists)} rankings -> {args.output}")
    return 0


def _load_pipeline_config(args) -> PipelineConfig:
    """Config file first, CLI flags override."""
    base = {}
    if args.config:
        with open(args.config) as f:
            base = json.load(f)
    train = TrainConfig(**base.pop("train", {}))
    prf = PrfConfig(**base.pop("prf", {}))
    config = PipelineConfig(train=train, prf=prf, **base)
    if args.method is not None:
        config.method = args.method
    if args.budget is not None:
        config.total_budget = args.budget
    if args.first_stage is not None:
        config.first_stage_k = args.first_stage
    if args.fb_terms is not None:
        config.prf.fb_terms = args.fb_terms
        config.train.sparsity_target = args.fb_terms
    if args.fb_docs is not None:
        config.prf.fb_docs = args.fb_docs
    if getattr(args, "lambda_") is not None:
        config.lam = args.lambda_
    if args.depth is not None:
        config.output_depth = args.depth
    if args.seed is not None:
        config.seed = args.seed
        config.train.seed = args.seed
    return PipelineConfig(method=config.method,
                          first_stage_k=config.first_stage_k,
                          total_budget=config.total_budget,
                          output_depth=config.output_depth, lam=config.lam,
                          train=config.train, prf=config.prf,
                          seed=config.seed)


def _make_teacher(args, index, qrels_path=None):
    spec = args.teacher
    if spec.startswith("remote:"):
        return lambda query: RemoteTeacher(spec[len("remote:"):])
    if spec == "hidden-linear":
        if not args.teacher_weights:
            raise SystemExit("--teacher hidden-linear requires --teacher-weights")
        with open(args.teacher_weights) as f:
            tw = json.load(f)
        teacher = HiddenLinearTeacher(index, tw["weights"],
                                      noise_sd=tw.get("noise_sd", 0.0),
                                      seed=tw.get("seed", 0))
        return lambda query: teacher
    if spec == "qrels-oracle":
        if not qrels_path:
            raise SystemExit("--teacher qrels-oracle requires --qrels")
        qrels = read_qrels(qrels_path)
        return lambda query: QrelsOracleTeacher(qrels, query_id=query.query_id,
                                                seed=args.seed or 0)
    raise SystemExit(f"unknown teacher: {spec!r}")


def _cmd_pipeline(args) -> int:
    index = Index.load(args.index_dir)
    docs_by_id = {}
    for doc_id in index.direct:
        docs_by_id[doc_id] = None  # filled from corpus below
    from .index import Document
    for doc in read_corpus(args.corpus):
        docs_by_id[doc.doc_id] = doc

    config = _load_pipeline_config(args)
    teacher_for = _make_teacher(args, index, qrels_path=args.qrels)
    diag_dir = Path(args.diagnostics_dir) if args.diagnostics_dir else None
    if diag_dir:
        diag_dir.mkdir(parents=True, exist_ok=True)

    lists = []
    for query in read_queries(args.queries):
        result = run_pipeline(index, docs_by_id, query, teacher_for(query), config)
        if result.final:
            lists.append(result.final)
        if diag_dir:
            with open(diag_dir / f"{query.query_id}.json", "w") as f:
                json.dump(result.diagnostics, f, indent=2)
    write_run(args.output, lists, tag=f"{config.method}")
    print(f"wrote {len(lists)} rankings -> {args.output}")
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec.from_json(args.spec)
    collection = generate_synthetic(spec)
    collection.write(args.out_dir)
    print(f"generated {len(collection.documents)} docs, "
          f"{len(collection.queries)} queries -> {args.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    config = MetricConfig(k=args.k, min_rel=args.min_rel, rbo_p=args.rbo_p)
    result = evaluate_run(args.run, args.qrels, config,
                          ref_run_path=args.ref_run,
                          first_stage_path=args.first_stage,
                          compare_path=args.compare)
    print(report_to_table(result["report"]))
    if "t_test_ndcg" in result:
        t = result["t_test_ndcg"]
        print(f"\npaired t-test (ndcg, two-sided): t={t['t']:.4f} "
              f"p={t['p']:.4f} n={t['n']}")
    if args.json_out:
        with open(args.json_out, "w") as f:
            f.write(report_to_json(result["report"]))
    if args.report_dir:
        write_report(result["report"], args.report_dir)
        print(f"report written -> {args.report_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexdistill")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index from a JSONL corpus")
    p.add_argument("corpus")
    p.add_argument("index_dir")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("retrieve", help="BM25 retrieval to a TREC run file")
    p.add_argument("--index-dir", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--output", required=True)
    p.add_argument("--tag", default="bm25")
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("pipeline", help="run a feedback pipeline end to end")
    p.add_argument("--index-dir", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=["none", "odis", "rm3", "bo1"])
    p.add_argument("--teacher", default="hidden-linear",
                   help="hidden-linear | qrels-oracle | remote:URL")
    p.add_argument("--teacher-weights", help="JSON weights for hidden-linear")
    p.add_argument("--qrels", help="qrels for the qrels-oracle teacher")
    p.add_argument("--budget", type=int)
    p.add_argument("--first-stage", type=int)
    p.add_argument("--fb-terms", type=int)
    p.add_argument("--fb-docs", type=int)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--depth", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON pipeline config; flags override")
    p.add_argument("--diagnostics-dir")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("synth", help="generate a synthetic collection")
    p.add_argument("spec", help="JSON SynthSpec file")
    p.add_argument("out_dir")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="evaluate a TREC run against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--ref-run", help="exhaustive reference run for RBO")
    p.add_argument("--first-stage", help="first-stage run for overlap/+Rel")
    p.add_argument("--compare", help="second run for a paired t-test")
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--min-rel", type=int, default=2)
    p.add_argument("--rbo-p", type=float, default=0.99)
    p.add_argument("--json-out")
    p.add_argument("--report-dir", help="write metrics.tsv + figures here")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
