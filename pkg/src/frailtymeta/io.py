"""Study descriptors in, result tables out.

Descriptors are JSON documents validated against ``data/descriptor.schema.json``
(see the README for the layout); a flat CSV form is accepted for studies
with the default criteria.  ``run_batch`` fits every (study, arm, r_hyp)
cell, bootstraps its standard errors and writes ``results.csv`` and
``results.json``.

Result CSV columns are ``RESULT_COLUMNS`` in that order.  Missing values
are written as ``NA`` in CSV and ``null`` in JSON; floats are written with
``repr`` so reruns are byte-identical.
"""

from dataclasses import dataclass, field, replace
from importlib import resources
from typing import List, Optional, Sequence, Tuple
import csv
import io as _io
import json
import math
import os
import zlib

import jsonschema
import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_se
from .criteria import CriteriaVariant
from .exceptions import (
    BootstrapFailureError,
    ConfigurationError,
    ConvergenceError,
    DescriptorValidationError,
    FrailtyDomainError,
    SimulationInfeasibleError,
)
from .exposure import FixedWindow, window_from_dict
from .fitting import R_HYP_SET, StudySpec, solve_system
from .ideation import IdeationSpec, fit_ideation

SCHEMA_VERSION = 1
SEED_ENV = "FRAILTYMETA_SEED"
HEADLINE_R_HYP = 0.3

RESULT_COLUMNS = (
    "study_id", "arm", "outcome", "r_hyp", "status",
    "lambda_hat", "mu_con_hat", "mu_exp_hat", "alpha_hat", "residual", "converged",
    "Q_base", "Q_flup_con", "Q_flup_exp", "r_check", "cohen_d", "sd_effect", "se_cohen_d",
    "mrr", "se_mrr", "nrr", "se_nrr", "n_bootstrap", "n_bootstrap_failed", "boundary",
    "message",
)
IDEATION_COLUMNS = (
    "study_id", "arm", "r_hyp", "status", "sigma", "mu_pre", "tau_pre", "mu_con", "tau_con",
    "mu_exp", "tau_exp", "offset", "residual", "converged", "correlation", "cohen_d",
    "sd_effect", "message",
)
CSV_DESCRIPTOR_COLUMNS = (
    "study_id", "outcome", "n_con", "n_exp", "q_base", "q_flup_con", "q_flup_exp",
    "baseline_length", "min_age", "max_age", "mean_age", "sd_age", "risk_onset_age",
    "flup_length_con", "flup_length_exp", "r_hyp", "arm",
)

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID, EXIT_FAILED = 0, 1, 2, 3

# errors that mark a single study as failed without stopping the batch
STUDY_ERRORS = (ConvergenceError, SimulationInfeasibleError, BootstrapFailureError,
                FrailtyDomainError, ConfigurationError, FloatingPointError)


def load_schema():
    text = resources.files("frailtymeta").joinpath("data/descriptor.schema.json").read_text()
    return json.loads(text)


def default_seed(fallback=0):
    """Seed from the environment variable ``FRAILTYMETA_SEED`` if set."""
    value = os.environ.get(SEED_ENV)
    if value is None or value.strip() == "":
        return fallback
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {value!r}") from None


# -- loading ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Descriptors:
    """Validated contents of a descriptor file."""

    studies: Tuple[StudySpec, ...] = ()
    ideation: Tuple[IdeationSpec, ...] = ()
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.studies) + len(self.ideation)


def _location(prefix, path):
    return prefix + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path)


def _record_name(doc, path):
    # "studies[2] (id 'X')" for messages
    if len(path) >= 2 and isinstance(path[1], int):
        try:
            sid = doc[path[0]][path[1]].get("study_id")
        except (KeyError, IndexError, AttributeError, TypeError):
            sid = None
        if sid:
            return f" (study_id {sid!r})"
    return ""


def _schema_errors(doc, source):
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        path = list(err.absolute_path)
        msg = err.message
        if err.validator == "oneOf" and path and path[0] == "studies" and len(path) == 2:
            msg = "give either n_exp and q_flup_exp, or a list of arms"
        elif err.validator == "oneOf" and err.context:
            msg = min(err.context, key=lambda e: len(e.message)).message
        errors.append((_location(source, path) + _record_name(doc, path), msg))
    return errors


def _study_specs(rec, allowed_r_hyp):
    """Expand one descriptor record into a StudySpec per experimental arm."""
    crit = rec.get("criteria", {"tag": "Default"})
    criteria = CriteriaVariant(crit["tag"], crit.get("params", {}), crit.get("default_rate"))
    r_hyp = rec.get("r_hyp", HEADLINE_R_HYP)
    if allowed_r_hyp is not None and not any(math.isclose(r_hyp, v) for v in allowed_r_hyp):
        raise FrailtyDomainError(f"r_hyp {r_hyp} not in the configured set {tuple(allowed_r_hyp)}")
    common = dict(
        study_id=rec["study_id"], outcome=rec["outcome"], n_con=rec["n_con"],
        q_base=rec.get("q_base"), q_flup_con=rec["q_flup_con"],
        baseline_window=window_from_dict(rec["baseline_window"]),
        flup_window_con=window_from_dict(rec["flup_window_con"]),
        criteria=criteria, r_hyp=r_hyp)
    aux = dict(rec.get("aux", {}))
    arms = rec.get("arms")
    if arms is None:
        arms = [{"arm": rec.get("arm", "exp"), "n_exp": rec["n_exp"],
                 "q_flup_exp": rec["q_flup_exp"],
                 "flup_window_exp": rec.get("flup_window_exp", rec["flup_window_con"])}]
    out = []
    for a in arms:
        arm_aux = dict(aux)
        if "flup_rate_exp" in a:
            arm_aux["flup_rate_exp"] = a["flup_rate_exp"]
        out.append(StudySpec(
            n_exp=a["n_exp"], q_flup_exp=a["q_flup_exp"],
            flup_window_exp=window_from_dict(a.get("flup_window_exp", rec["flup_window_con"])),
            aux=arm_aux, arm=a["arm"], **common))
    return out


def _ideation_spec(rec):
    return IdeationSpec(
        rec["study_id"], rec["mean_pre"], rec["sd_pre"], rec["mean_con"], rec["sd_con"],
        rec["mean_exp"], rec["sd_exp"], rec.get("n_con", 1), rec.get("n_exp", 1),
        rec.get("r_hyp", HEADLINE_R_HYP), rec.get("threshold"), rec.get("offset", 0.5))


def validate_document(doc, source="descriptor", allowed_r_hyp=R_HYP_SET):
    """Validate a parsed descriptor document and build the specs.

    Raises DescriptorValidationError listing every problem found, each
    located by record and field.
    """
    if not isinstance(doc, dict):
        raise DescriptorValidationError([(source, "top level must be a JSON object")])
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DescriptorValidationError([(
            f"{source}.schema_version",
            f"unsupported schema version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION}")])
    errors = _schema_errors(doc, source)
    if errors:
        raise DescriptorValidationError(errors)
    studies, ideation, provenance, seen = [], [], {}, set()
    for key, build in (("studies", lambda r: _study_specs(r, allowed_r_hyp)),
                       ("ideation_studies", lambda r: [_ideation_spec(r)])):
        for i, rec in enumerate(doc.get(key, [])):
            loc = f"{source}.{key}[{i}] (study_id {rec['study_id']!r})"
            try:
                specs = build(rec)
            except (FrailtyDomainError, ConfigurationError) as exc:
                errors.append((loc, str(exc)))
                continue
            for s in specs:
                ident = (key, s.study_id, getattr(s, "arm", "exp"))
                if ident in seen:
                    errors.append((loc, f"duplicate study_id/arm {s.study_id!r}/"
                                        f"{getattr(s, 'arm', 'exp')!r}"))
                seen.add(ident)
            (studies if key == "studies" else ideation).extend(specs)
            if "provenance" in rec:
                provenance[rec["study_id"]] = dict(rec["provenance"])
    if errors:
        raise DescriptorValidationError(errors)
    return Descriptors(tuple(studies), tuple(ideation), provenance)


def _csv_records(text, source):
    """Convert the flat CSV subset into descriptor records; errors carry line numbers."""
    reader = csv.DictReader(_io.StringIO(text))
    unknown = set(reader.fieldnames or ()) - set(CSV_DESCRIPTOR_COLUMNS)
    if unknown:
        raise DescriptorValidationError([(f"{source}:1", f"unknown columns {sorted(unknown)}")])
    ints = {"n_con", "n_exp"}
    records, errors = [], []
    for row in reader:
        line = reader.line_num
        rec = {}
        for k, v in row.items():
            v = (v or "").strip()
            if v == "" or v.upper() == "NA":
                continue
            if k in ("study_id", "outcome", "arm"):
                rec[k] = v
                continue
            try:
                rec[k] = int(v) if k in ints else float(v)
            except ValueError:
                errors.append((f"{source}:{line}.{k}", f"not a number: {v!r}"))
        if "baseline_length" in rec:
            base = {"type": "fixed", "length": rec.pop("baseline_length")}
        else:
            base = {"type": "lifetime"}
            for k in ("min_age", "max_age", "mean_age", "sd_age", "risk_onset_age"):
                if k in rec:
                    base[k] = rec.pop(k)
        rec["baseline_window"] = base
        for arm in ("con", "exp"):
            if f"flup_length_{arm}" in rec:
                rec[f"flup_window_{arm}"] = {"type": "fixed",
                                             "length": rec.pop(f"flup_length_{arm}")}
        records.append((line, rec))
    if errors:
        raise DescriptorValidationError(errors)
    return records


def load_descriptors(path, allowed_r_hyp=R_HYP_SET) -> Descriptors:
    """Read and validate a descriptor file (``.json`` or ``.csv``)."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DescriptorValidationError([(path, f"cannot read file: {exc}")]) from None
    if path.lower().endswith(".csv"):
        records = _csv_records(text, path)
        try:
            return validate_document({"schema_version": SCHEMA_VERSION,
                                      "studies": [r for _, r in records]},
                                     path, allowed_r_hyp)
        except DescriptorValidationError as exc:
            # translate studies[i] back to CSV line numbers
            lines = [line for line, _ in records]
            fixed = []
            for loc, msg in exc.errors:
                for i, line in enumerate(lines):
                    loc = loc.replace(f"{path}.studies[{i}]", f"{path}:{line}")
                fixed.append((loc, msg))
            raise DescriptorValidationError(fixed) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptorValidationError(
            [(f"{path}:{exc.lineno}:{exc.colno}", f"invalid JSON: {exc.msg}")]) from None
    return validate_document(doc, path, allowed_r_hyp)


def _window_json(w):
    return w.to_dict()


def spec_to_record(spec: StudySpec, provenance=None):
    """Descriptor record for one StudySpec (inverse of loading)."""
    rec = {"study_id": spec.study_id, "outcome": spec.outcome, "arm": spec.arm,
           "n_con": spec.n_con, "n_exp": spec.n_exp}
    if spec.q_base is not None:
        rec["q_base"] = spec.q_base
    rec.update(q_flup_con=spec.q_flup_con, q_flup_exp=spec.q_flup_exp,
               baseline_window=_window_json(spec.baseline_window),
               flup_window_con=_window_json(spec.flup_window_con),
               flup_window_exp=_window_json(spec.flup_window_exp),
               criteria=spec.criteria.to_dict(), r_hyp=spec.r_hyp)
    if spec.aux:
        rec["aux"] = {k: (int(v) if k in ("n_screened", "n_history") else v)
                      for k, v in spec.aux.items()}
    if provenance:
        rec["provenance"] = dict(provenance)
    return rec


def dump_descriptors(specs: Sequence[StudySpec], notes=None):
    doc = {"schema_version": SCHEMA_VERSION}
    if notes:
        doc["notes"] = notes
    doc["studies"] = [spec_to_record(s) for s in specs]
    return json.dumps(doc, indent=2) + "\n"


# -- running ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BatchConfig:
    """Run-matrix settings.

    ``r_hyp`` None fits each study at its own descriptor value; otherwise
    every study is fitted at each listed value.  ``bootstrap`` 0 skips the
    bootstrap.
    """

    r_hyp: Optional[Tuple[float, ...]] = R_HYP_SET
    bootstrap: int = 1000
    seed: int = 0
    positive_good: bool = False
    n_jobs: int = 1
    failure_policy: str = "drop-and-count"
    max_failure_fraction: float = 0.2
    n_starts: int = 16

    def __post_init__(self):
        if self.bootstrap != 0 and self.bootstrap < 2:
            raise ConfigurationError("bootstrap needs 0 (off) or at least 2 replicates")
        if self.r_hyp is not None:
            object.__setattr__(self, "r_hyp", tuple(float(r) for r in self.r_hyp))


def cell_seed(seed, study_id, arm, r_hyp):
    """Stable per-cell seed so each (study, arm, r_hyp) gets its own bootstrap streams."""
    ss = np.random.SeedSequence([int(seed) & (2**63 - 1), zlib.crc32(study_id.encode()),
                                 zlib.crc32(arm.encode()), int(round(r_hyp * 1e6)) % 2**31])
    return int(ss.generate_state(1, np.uint64)[0] & (2**63 - 1))


def _empty_row(spec, r_hyp):
    row = dict.fromkeys(RESULT_COLUMNS)
    row.update(study_id=spec.study_id, arm=spec.arm, outcome=spec.outcome, r_hyp=r_hyp)
    return row


def fit_cell(spec: StudySpec, r_hyp, config: BatchConfig):
    """Fit and bootstrap one (study, arm, r_hyp) cell; never raises for study-level failures."""
    row = _empty_row(spec, r_hyp)
    try:
        cell = replace(spec, r_hyp=r_hyp)
        fit = solve_system(cell, n_starts=config.n_starts, seed=config.seed)
    except STUDY_ERRORS as exc:
        row.update(status="failed", message=f"{type(exc).__name__}: {exc}")
        best = getattr(exc, "best", None)
        if best is not None and hasattr(best, "residual"):
            row.update(residual=best.residual, converged=False)
        return row
    sign = -1.0 if config.positive_good else 1.0
    row.update(
        status="ok" if fit.converged else "not_converged",
        lambda_hat=fit.lambda_hat, mu_con_hat=fit.mu_con_hat, mu_exp_hat=fit.mu_exp_hat,
        alpha_hat=fit.alpha_hat, residual=fit.residual, converged=fit.converged,
        Q_base=fit.Q_base, Q_flup_con=fit.Q_flup_con, Q_flup_exp=fit.Q_flup_exp,
        r_check=fit.r_check, cohen_d=sign * fit.cohen_d, sd_effect=fit.sd_effect,
        mrr=fit.mrr, nrr=fit.nrr, boundary=";".join(fit.boundary) or None,
        message=fit.nrr_note or None, n_bootstrap=config.bootstrap)
    if config.bootstrap:
        bc = BootstrapConfig(replicates=config.bootstrap,
                             seed=cell_seed(config.seed, spec.study_id, spec.arm, r_hyp),
                             failure_policy=config.failure_policy,
                             max_failure_fraction=config.max_failure_fraction)
        try:
            bs = bootstrap_se(fit, cell, bc)
        except STUDY_ERRORS as exc:
            row.update(status="bootstrap_failed", message=f"{type(exc).__name__}: {exc}")
            partial = getattr(exc, "partial", None)
            if partial is not None:
                row["n_bootstrap_failed"] = partial.n_failed
            return row
        row.update(se_cohen_d=bs.se_cohen_d, se_mrr=bs.se_mrr, se_nrr=bs.se_nrr,
                   n_bootstrap_failed=bs.n_failed)
    return row


def fit_ideation_cell(spec: IdeationSpec, r_hyp, config: BatchConfig):
    row = dict.fromkeys(IDEATION_COLUMNS)
    row.update(study_id=spec.study_id, arm="exp", r_hyp=r_hyp, offset=spec.offset)
    try:
        fit = fit_ideation(replace(spec, r_hyp=r_hyp), positive_good=config.positive_good)
    except STUDY_ERRORS as exc:
        row.update(status="failed", message=f"{type(exc).__name__}: {exc}")
        return row
    p = fit.params
    row.update(status="ok" if fit.converged else "not_converged", sigma=p.sigma,
               mu_pre=p.mu_pre, tau_pre=p.tau_pre, mu_con=p.mu_con, tau_con=p.tau_con,
               mu_exp=p.mu_exp, tau_exp=p.tau_exp, residual=fit.residual,
               converged=fit.converged, correlation=fit.correlation, cohen_d=fit.cohen_d,
               sd_effect=fit.sd_effect)
    return row


@dataclass
class BatchResult:
    rows: List[dict]
    ideation_rows: List[dict]
    exit_status: int

    @property
    def failures(self):
        return [r for r in self.rows + self.ideation_rows if r["status"] != "ok"]


def _cells(items, config):
    for spec in items:
        values = config.r_hyp if config.r_hyp is not None else (spec.r_hyp,)
        for r in values:
            yield spec, r


def _exit_status(rows):
    if not rows:
        return EXIT_OK
    bad = sum(r["status"] != "ok" for r in rows)
    if bad == 0:
        return EXIT_OK
    return EXIT_FAILED if bad == len(rows) else EXIT_PARTIAL


def run_batch(descriptors: Descriptors, config: BatchConfig = BatchConfig()) -> BatchResult:
    """Fit every (study, arm, r_hyp) cell; study-level failures become failure rows.

    Rows are ordered by study_id, arm and r_hyp regardless of ``n_jobs``.
    The exit status is 0 when all cells are "ok", 3 when none are and 1
    otherwise.
    """
    cells = list(_cells(descriptors.studies, config))
    icells = list(_cells(descriptors.ideation, config))
    if config.n_jobs == 1:
        rows = [fit_cell(s, r, config) for s, r in cells]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=config.n_jobs)(delayed(fit_cell)(s, r, config) for s, r in cells)
    irows = [fit_ideation_cell(s, r, config) for s, r in icells]
    key = lambda r: (r["study_id"], r["arm"], r["r_hyp"])  # noqa: E731
    rows.sort(key=key)
    irows.sort(key=key)
    return BatchResult(rows, irows, _exit_status(rows + irows))


# -- writing ---------------------------------------------------------------------------

def _csv_value(v):
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "NA" if not math.isfinite(v) else repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def rows_to_csv(rows, columns=RESULT_COLUMNS):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_value(r.get(c)) for c in columns])
    return buf.getvalue()


def result_document(result: BatchResult, config: BatchConfig):
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {"r_hyp": list(config.r_hyp) if config.r_hyp is not None else None,
                   "bootstrap": config.bootstrap, "seed": config.seed,
                   "positive_good": config.positive_good,
                   "failure_policy": config.failure_policy},
        "exit_status": result.exit_status,
        "columns": list(RESULT_COLUMNS),
        "results": [{c: _json_value(r.get(c)) for c in RESULT_COLUMNS} for r in result.rows],
        "ideation_columns": list(IDEATION_COLUMNS),
        "ideation_results": [{c: _json_value(r.get(c)) for c in IDEATION_COLUMNS}
                             for r in result.ideation_rows],
    }


def write_results(result: BatchResult, config: BatchConfig, out_dir):
    """Write results.csv, results.json and (if any) ideation_results.csv; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "results.csv"), os.path.join(out_dir, "results.json")]
    with open(paths[0], "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(result.rows))
    with open(paths[1], "w", encoding="utf-8") as fh:
        json.dump(result_document(result, config), fh, indent=2)
        fh.write("\n")
    if result.ideation_rows:
        paths.append(os.path.join(out_dir, "ideation_results.csv"))
        with open(paths[2], "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(result.ideation_rows, IDEATION_COLUMNS))
    return paths


def headline_r_hyp(config: BatchConfig):
    if config.r_hyp is None or HEADLINE_R_HYP in config.r_hyp:
        return HEADLINE_R_HYP
    return config.r_hyp[0]


def summary_table(result: BatchResult, config: BatchConfig):
    """Plain-text status table: every cell's status, with statistics at the headline r_hyp."""
    head = headline_r_hyp(config)
    lines = [f"{'study':<20} {'arm':<8} {'r_hyp':>5} {'status':<16} {'d':>8} {'se(d)':>7} "
             f"{'MRR':>7} {'NR RR':>7} {'resid':>9}"]

    def num(v, fmt):
        return "NA" if v is None or (isinstance(v, float) and not math.isfinite(v)) else fmt % v

    for r in result.rows:
        if r["status"] == "ok" and config.r_hyp is not None and not math.isclose(
                r["r_hyp"], head):
            continue
        lines.append(
            f"{r['study_id'][:20]:<20} {r['arm'][:8]:<8} {r['r_hyp']:>5.2f} {r['status']:<16} "
            f"{num(r['cohen_d'], '%.3f'):>8} {num(r['se_cohen_d'], '%.3f'):>7} "
            f"{num(r['mrr'], '%.3f'):>7} {num(r['nrr'], '%.3f'):>7} "
            f"{num(r['residual'], '%.2e'):>9}")
    for r in result.ideation_rows:
        if r["status"] == "ok" and config.r_hyp is not None and not math.isclose(
                r["r_hyp"], head):
            continue
        lines.append(
            f"{r['study_id'][:20]:<20} {'ideation':<8} {r['r_hyp']:>5.2f} {r['status']:<16} "
            f"{num(r['cohen_d'], '%.3f'):>8} {'':>7} {'':>7} {'':>7} "
            f"{num(r['residual'], '%.2e'):>9}")
    n_bad = len(result.failures)
    lines.append(f"{len(result.rows) + len(result.ideation_rows)} cells, {n_bad} not ok; "
                 f"statistics shown at r_hyp = {head}")
    return "\n".join(lines)


def emit_plots(result: BatchResult, config: BatchConfig, out_dir):
    """Forest-style plot of Cohen's d (+/- 1.96 SE) per outcome at the headline r_hyp."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    head = headline_r_hyp(config)
    rows = [r for r in result.rows if r["status"] in ("ok", "bootstrap_failed")
            and math.isclose(r["r_hyp"], head) and r["cohen_d"] is not None
            and math.isfinite(r["cohen_d"])]
    paths = []
    os.makedirs(out_dir, exist_ok=True)
    for outcome in sorted({r["outcome"] for r in rows}):
        sel = [r for r in rows if r["outcome"] == outcome]
        fig, ax = plt.subplots(figsize=(6, 1 + 0.4 * len(sel)))
        y = np.arange(len(sel))[::-1]
        d = np.array([r["cohen_d"] for r in sel])
        se = np.array([r["se_cohen_d"] if r["se_cohen_d"] is not None else np.nan
                       for r in sel])
        ax.errorbar(d, y, xerr=1.96 * se, fmt="s", color="k", capsize=3)
        ax.axvline(0.0, color="grey", lw=0.8, ls="--")
        ax.set_yticks(y)
        ax.set_yticklabels([f"{r['study_id']} ({r['arm']})" for r in sel])
        ax.set_xlabel("Cohen's d")
        ax.set_title(f"{outcome}, r_hyp = {head}")
        fig.tight_layout()
        path = os.path.join(out_dir, f"forest_{outcome}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
