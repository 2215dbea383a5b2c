"""Command-line front end: ingest, indices, survival, gravity, synth, report.

Each subcommand reads the flat-file inputs it needs, runs the matching
library calls, and writes CSV/JSON/SVG artifacts plus a manifest of
content hashes into ``--out``. Usage errors exit with status 2 (via
argparse); module errors print their diagnostic and exit with 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import gravity as gravity_mod
from . import indices as indices_mod
from . import registry
from . import report
from . import selection as selection_mod
from . import survival as survival_mod
from . import synth as synth_mod
from .errors import PatlasError


def _add_corpus_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--patents", required=required, help="patents CSV path")
    p.add_argument("--applicants", required=required, help="applicants CSV path")
    p.add_argument("--citations", required=required, help="citations CSV path")
    p.add_argument("--eu-members", help="optional member list file, one code per line")


def _add_out_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory for artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patlas",
        description="patent-landscape tables: indices, survival, gravity",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="validate, link and summarize a corpus")
    _add_corpus_flags(p)
    _add_out_flag(p)

    px = sub.add_parser("indices", help="portfolio and citation indices")
    isub = px.add_subparsers(dest="index_kind", required=True)

    p = isub.add_parser("rca", help="revealed-advantage table")
    _add_corpus_flags(p)
    p.add_argument("--totals", required=True,
                   help="CSV with country,total_count denominators")
    _add_out_flag(p)

    p = isub.add_parser("proximity", help="pairwise portfolio-overlap matrix")
    _add_corpus_flags(p)
    p.add_argument("--class-level", type=int, default=4)
    _add_out_flag(p)

    p = isub.add_parser("cr", help="sector concentration ratios")
    _add_corpus_flags(p)
    p.add_argument("--q", type=int, default=5, help="number of top firms")
    _add_out_flag(p)

    p = isub.add_parser("citations", help="cross-country citation matrix")
    _add_corpus_flags(p)
    p.add_argument("--grouping", choices=["applicant", "owner"], default="applicant",
                   help="attribute flows by applicant or ultimate-owner country")
    _add_out_flag(p)

    p = sub.add_parser("survival", help="first-citation lag curves")
    _add_corpus_flags(p)
    p.add_argument("--window-end", default="2023-12", help="censoring month YYYY-MM")
    p.add_argument("--svg", action="store_true", help="emit one step plot per group")
    _add_out_flag(p)

    p = sub.add_parser("gravity", help="dyadic citation-flow regressions")
    _add_corpus_flags(p)
    p.add_argument("--bilateral", required=True, help="dyad covariates CSV")
    p.add_argument("--macro", required=True, help="country-year covariates CSV")
    p.add_argument("--spec", type=int, default=1, choices=[1, 2, 3, 4],
                   help="regressor layout (1 FE baseline .. 4 EU dummies)")
    p.add_argument("--offset", type=float, default=gravity_mod.DEFAULT_OFFSET)
    p.add_argument("--cluster", choices=["ordered", "unordered"], default="ordered")
    p.add_argument("--heckman", action="store_true",
                   help="also fit the probit first stage and IMR-augmented stage")
    _add_out_flag(p)

    ps = sub.add_parser("synth", help="deterministic synthetic data")
    ssub = ps.add_subparsers(dest="synth_kind", required=True)

    p = ssub.add_parser("corpus", help="corpus with planted index facts")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-firms", type=int, default=40)
    p.add_argument("--n-patents", type=int, default=400)
    p.add_argument("--n-classes", type=int, default=8)
    _add_out_flag(p)

    p = ssub.add_parser("panel", help="panel dataset with known coefficients")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-countries", type=int, default=20)
    p.add_argument("--n-years", type=int, default=5)
    p.add_argument("--selection", action="store_true",
                   help="add a probit link gate (structural zeros)")
    p.add_argument("--delta", type=float, default=0.5,
                   help="selection-correction coefficient when --selection is set")
    _add_out_flag(p)

    p = sub.add_parser("report", help="run every table on one dataset")
    _add_corpus_flags(p)
    p.add_argument("--bilateral", required=True)
    p.add_argument("--macro", required=True)
    p.add_argument("--totals", help="optional denominators; enables the RCA table")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--class-level", type=int, default=4)
    p.add_argument("--window-end", default="2023-12")
    p.add_argument("--offset", type=float, default=gravity_mod.DEFAULT_OFFSET)
    p.add_argument("--cluster", choices=["ordered", "unordered"], default="ordered")
    p.add_argument("--heckman", action="store_true")
    p.add_argument("--svg", action="store_true")
    _add_out_flag(p)

    return parser


def _load_linked(args) -> corpus_mod.LinkedCorpus:
    corpus = corpus_mod.load_corpus(args.patents, args.applicants, args.citations)
    if getattr(args, "eu_members", None):
        corpus = corpus_mod.aggregate_eu(corpus, registry.load_members(args.eu_members))
    return corpus_mod.link_records(corpus)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fraction_payload(report_dict) -> dict:
    return {
        key: {"share_exact": str(frac), "share": float(frac)}
        for key, frac in sorted(report_dict.items())
    }


def _write_summary(corpus, out: Path) -> Path:
    summary = {
        "patents": int(len(corpus.patents)),
        "applicants": int(len(corpus.applicants)),
        "families": int(len(corpus.families)),
        "citations": int(len(corpus.citations)),
        "violations": int(len(corpus.violations)),
        "missing": _fraction_payload(corpus.missing_report),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _cmd_ingest(args) -> list[Path]:
    out = _outdir(args)
    corpus = _load_linked(args)
    fam_rows = [
        (
            row.Index,
            row.n_patents,
            "|".join(row.countries),
            "|".join(row.classes),
            row.earliest_pub.date().isoformat(),
        )
        for row in corpus.families.itertuples()
    ]
    fam_path = report.write_table(
        out / "families.csv",
        ["family_id", "n_patents", "countries", "classes", "earliest_pub"],
        fam_rows,
    )
    vio_rows = [(v.file, v.row, v.reason) for v in corpus.violations]
    vio_path = report.write_table(out / "violations.csv", ["file", "row", "reason"], vio_rows)
    return [_write_summary(corpus, out), fam_path, vio_path]


def _rca_rows(corpus, totals_path):
    totals = gravity_mod._read_covariate_table(
        totals_path, ["country", "total_count"], "totals", ["total_count"]
    )
    ai = corpus_mod.country_family_counts(corpus)
    world_ai = corpus_mod.world_family_count(corpus)
    world_total = float(totals["total_count"].sum())
    world = indices_mod.CountryPatentCounts("WORLD", world_ai, world_total)
    rows = []
    for rec in sorted(totals.itertuples(), key=lambda r: r.country):
        counts = indices_mod.CountryPatentCounts(
            rec.country, float(ai.get(rec.country, 0.0)), float(rec.total_count)
        )
        rows.append((rec.country, counts.ai_count, counts.total_count,
                     indices_mod.rca(counts, world)))
    return rows


def _cmd_indices(args) -> list[Path]:
    out = _outdir(args)
    corpus = _load_linked(args)
    if args.index_kind == "rca":
        rows = _rca_rows(corpus, args.totals)
        return [report.write_table(out / "rca.csv",
                                   ["country", "ai_count", "total_count", "rca"], rows)]
    if args.index_kind == "proximity":
        observed = sorted({c for cs in corpus.families["countries"] for c in cs})
        holders = observed
        if getattr(args, "eu_members", None):
            rest = [c for c in observed if c not in corpus.eu_members]
            holders = (["EU"] + rest) if len(rest) < len(observed) else rest
        vectors = {
            h: indices_mod.portfolio_vector(corpus, h, class_level=args.class_level)
            for h in holders
        }
        port_rows = [
            (h, cls, share)
            for h in holders
            for cls, share in sorted(vectors[h].shares.items())
        ]
        p1 = report.write_table(out / "portfolios.csv",
                                ["holder", "class", "share"], port_rows)
        values = [
            [indices_mod.min_complement_proximity(vectors[a], vectors[b]) for b in holders]
            for a in holders
        ]
        p2 = report.write_matrix_wide(holders, values, out / "proximity.csv", "holder")
        return [p1, p2]
    if args.index_kind == "cr":
        sectors = indices_mod.sector_firm_counts(corpus)
        rows = []
        for sector in sorted(sectors):
            conc = indices_mod.concentration_ratio(sectors[sector], q=args.q, sector=sector)
            rows.append((sector, conc.q, conc.cr, len(sectors[sector])))
        return [report.write_table(out / "cr.csv", ["sector", "q", "cr", "n_firms"], rows)]
    if args.index_kind == "citations":
        grouping = args.grouping
        cit = corpus.citations
        citing_col = "citing_country" if grouping == "applicant" else "citing_owner_country"
        cited_col = "cited_countries" if grouping == "applicant" else "cited_owner_countries"
        observed = {c for c in cit[citing_col] if c}
        observed.update(c for cs in cit[cited_col] for c in cs)
        axis = sorted(observed)
        if getattr(args, "eu_members", None):
            non_eu = [c for c in axis if c not in corpus.eu_members]
            axis = (["EU"] + non_eu) if len(non_eu) < len(axis) else non_eu
        matrix = indices_mod.citation_matrix(corpus, axis, grouping=grouping)
        p1 = report.write_citation_long(matrix, out / "citations_long.csv")
        share_rows = []
        for code in matrix.axis:
            total = float(matrix.row(code).sum())
            share = indices_mod.foreign_citation_share(matrix, code) if total > 0 else None
            share_rows.append((code, total, share))
        p2 = report.write_table(out / "foreign_share.csv",
                                ["country", "outbound_total", "foreign_share"], share_rows)
        return [p1, p2]
    raise PatlasError(f"unknown indices kind: {args.index_kind}")


def _cmd_survival(args) -> list[Path]:
    out = _outdir(args)
    corpus = _load_linked(args)
    lags = survival_mod.first_citation_lags(corpus, window_end=args.window_end)
    curves = survival_mod.group_curves(lags)
    paths = [
        report.write_survival_table(curves, out / "survival.csv"),
        report.write_plateau_table(curves, out / "plateau.csv"),
    ]
    if args.svg:
        for group in sorted(curves):
            paths.append(report.svg_survival(
                {group: curves[group]}, out / f"survival_{group}.svg",
                title=f"first-citation survival: {group}",
            ))
    return paths


def _cmd_gravity(args) -> list[Path]:
    out = _outdir(args)
    corpus = _load_linked(args)
    panel = gravity_mod.build_panel(corpus, args.bilateral, args.macro)
    design = gravity_mod.transform_covariates(
        panel, offset=args.offset, specification=args.spec, cluster=args.cluster
    )
    fit = gravity_mod.clustered_se(gravity_mod.ppml_fit(design), design)
    paths = [report.write_coefficient_table(fit, out / f"gravity_spec{args.spec}.csv")]
    if args.heckman:
        first = selection_mod.probit_fit(
            selection_mod.first_stage_design(panel, offset=args.offset, cluster=args.cluster)
        )
        paths.append(report.write_selection_table(first, out / "first_stage.csv"))
        second = selection_mod.heckman_second_stage(
            panel.positive_subset(), first,
            specification=args.spec, offset=args.offset, cluster=args.cluster,
        )
        paths.append(report.write_coefficient_table(second, out / "heckman.csv"))
    return paths


def _cmd_synth(args) -> list[Path]:
    out = _outdir(args)
    if args.synth_kind == "corpus":
        files, _ = synth_mod.gen_corpus(
            out, args.seed,
            n_firms=args.n_firms, n_patents=args.n_patents, n_classes=args.n_classes,
        )
    else:
        sel = (synth_mod.DEFAULT_GAMMA, args.delta) if args.selection else None
        files, _ = synth_mod.gen_panel(
            out, args.seed,
            n_countries=args.n_countries, n_years=args.n_years, selection=sel,
        )
    return sorted(files.values())


def _cmd_report(args) -> list[Path]:
    out = _outdir(args)
    corpus = _load_linked(args)
    paths = [_write_summary(corpus, out)]

    if args.totals:
        rows = _rca_rows(corpus, args.totals)
        paths.append(report.write_table(
            out / "rca.csv", ["country", "ai_count", "total_count", "rca"], rows))

    sectors = indices_mod.sector_firm_counts(corpus)
    cr_rows = []
    for sector in sorted(sectors):
        conc = indices_mod.concentration_ratio(sectors[sector], q=args.q, sector=sector)
        cr_rows.append((sector, conc.q, conc.cr, len(sectors[sector])))
    paths.append(report.write_table(out / "cr.csv",
                                    ["sector", "q", "cr", "n_firms"], cr_rows))

    lags = survival_mod.first_citation_lags(corpus, window_end=args.window_end)
    curves = survival_mod.group_curves(lags)
    paths.append(report.write_survival_table(curves, out / "survival.csv"))
    paths.append(report.write_plateau_table(curves, out / "plateau.csv"))
    if args.svg:
        for group in sorted(curves):
            paths.append(report.svg_survival(
                {group: curves[group]}, out / f"survival_{group}.svg",
                title=f"first-citation survival: {group}",
            ))

    panel = gravity_mod.build_panel(corpus, args.bilateral, args.macro)
    for spec in (1, 2, 3, 4):
        design = gravity_mod.transform_covariates(
            panel, offset=args.offset, specification=spec, cluster=args.cluster
        )
        fit = gravity_mod.clustered_se(gravity_mod.ppml_fit(design), design)
        paths.append(report.write_coefficient_table(fit, out / f"gravity_spec{spec}.csv"))
    if args.heckman:
        first = selection_mod.probit_fit(
            selection_mod.first_stage_design(panel, offset=args.offset, cluster=args.cluster)
        )
        paths.append(report.write_selection_table(first, out / "first_stage.csv"))
        second = selection_mod.heckman_second_stage(
            panel.positive_subset(), first,
            specification=1, offset=args.offset, cluster=args.cluster,
        )
        paths.append(report.write_coefficient_table(second, out / "heckman.csv"))
    return paths


_COMMANDS = {
    "ingest": _cmd_ingest,
    "indices": _cmd_indices,
    "survival": _cmd_survival,
    "gravity": _cmd_gravity,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        artifacts = _COMMANDS[args.subcommand](args)
        if args.subcommand != "synth":
            report.write_manifest(artifacts, Path(args.out))
    except PatlasError as exc:
        print(f"patlas: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"patlas: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
