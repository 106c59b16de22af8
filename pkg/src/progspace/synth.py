"""Seeded synthetic longitudinal cohorts with planted progression zones.

Every subject carries two latent decline scores, memory `m` and cognition
`c`, that grow linearly in months at zone-specific rates. The clinical
stage at a visit is read off `m + c` against two thresholds, and each
observed feature is a non-negative mix of the latents plus truncated
Gaussian noise. Controls drift with age, so older controls sit closer to
the patient zones. A few patients revert one stage between months 12
and 24.

The defaults are deliberately well separated so that the full pipeline
can be checked against the planted truth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cohort import ClinicalRecord, Cohort, ColumnSpec, Diagnosis, VISIT_MONTHS
from .errors import ArtifactError, ConfigError

ZONES = ("Control", "Low", "Moderate", "High")
GROUPS = (Diagnosis.CONTROL, Diagnosis.MCI, Diagnosis.DEMENTIA)

# cohort sizes and demographics per prediction horizon
PROFILES = {
    24: dict(n_subjects=453, female_fraction=0.4591,
             age_model={"CN": (72.89, 6.06), "MCI": (71.61, 7.49), "AD": (72.92, 8.11)}),
    48: dict(n_subjects=248, female_fraction=0.4959,
             age_model={"CN": (72.18, 6.63), "MCI": (71.36, 6.67), "AD": (70.34, 7.42)}),
}


@dataclass
class CohortSpec:
    n_subjects: int = 453
    group_proportions: tuple = (0.35, 0.40, 0.25)  # control, MCI, dementia
    # P(Low | MCI) and P(High | dementia); the rest of each group is Moderate
    low_share_mci: float = 0.6
    high_share_dementia: float = 0.6
    centers: dict = field(default_factory=lambda: {
        "Control": (0.25, 0.25), "Low": (0.75, 0.60), "Moderate": (1.05, 0.95), "High": (1.55, 1.35)})
    # (memory_rate, cognition_rate) per month
    rates: dict = field(default_factory=lambda: {
        "Control": (0.0005, 0.0005), "Low": (0.002, 0.0015), "Moderate": (0.006, 0.005), "High": (0.012, 0.010)})
    rate_jitter: float = 0.1
    latent_sd: float = 0.06
    # spread along m - c: how memory-heavy or cognition-heavy a subject's decline is
    profile_sd: float = 0.3
    profile_rate_tilt: float = 0.5
    control_profile_scale: float = 0.25  # controls barely decline, so their profile tilt is small
    aging_slope: float = 0.02  # latent units per year of age, controls only
    aging_cap: float = 0.15  # bound on the age shift so old controls stay below the MCI threshold
    thresholds: tuple = (1.0, 2.0)
    noise_sd: float = 0.05
    apoe4_probs: dict = field(default_factory=lambda: {
        "Control": (0.72, 0.25, 0.03), "Low": (0.65, 0.30, 0.05),
        "Moderate": (0.45, 0.40, 0.15), "High": (0.25, 0.40, 0.35)})
    reversion_fraction: float = 0.05
    age_model: dict = field(default_factory=lambda: dict(PROFILES[24]["age_model"]))
    female_fraction: float = 0.4591
    n_features: dict = field(default_factory=lambda: {
        "memory": 80, "cognition": 80, "function": 40, "other": 6})
    n_categorical: int = 4
    n_tokens: int = 3
    missing_rate: float = 0.05
    seed: int = 0

    @classmethod
    def for_horizon(cls, horizon: int, **overrides):
        if horizon not in PROFILES:
            raise ConfigError(f"no synthetic profile for horizon {horizon}")
        prof = PROFILES[horizon]
        kw = dict(n_subjects=prof["n_subjects"], female_fraction=prof["female_fraction"],
                  age_model=dict(prof["age_model"]))
        kw.update(overrides)
        return cls(**kw)

    def encoded_width(self) -> int:
        """Feature columns per visit after one-hot encoding."""
        return sum(self.n_features.values()) + self.n_categorical * self.n_tokens

    def validate(self) -> None:
        p = np.asarray(self.group_proportions, dtype=float)
        if p.shape != (3,) or (p < 0).any() or abs(p.sum() - 1) > 1e-9:
            raise ConfigError("group proportions must be three non-negative numbers summing to 1")
        for name in ("low_share_mci", "high_share_dementia", "female_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.profile_sd < 0 or self.control_profile_scale < 0:
            raise ConfigError("profile spreads must be non-negative")
        if not 0 <= self.reversion_fraction <= 0.1:
            raise ConfigError("reversion_fraction must lie in [0, 0.1]")
        if not 0 <= self.missing_rate < 1:
            raise ConfigError("missing_rate must lie in [0, 1)")
        if self.n_subjects < 1:
            raise ConfigError("n_subjects must be positive")
        t1, t2 = self.thresholds
        if not 0 < t1 < t2:
            raise ConfigError("diagnosis thresholds must satisfy 0 < control/MCI < MCI/dementia")
        for a, b in (("Low", "Moderate"), ("Moderate", "High")):
            for i, latent in enumerate(("memory", "cognition")):
                if not self.rates[a][i] < self.rates[b][i]:
                    raise ConfigError(f"{latent} rate of {a} must be below that of {b}")
        u = {z: sum(self.centers[z]) for z in ZONES}
        if not (u["Control"] < t1 <= u["Low"] < t2 <= u["High"] and u["Low"] < u["Moderate"] < u["High"]):
            raise ConfigError("zone centers are inconsistent with the diagnosis thresholds")
        if u["Control"] + 2 * self.aging_cap >= t1:
            raise ConfigError("aging_cap lets controls reach the MCI threshold")
        for z in ZONES:
            probs = np.asarray(self.apoe4_probs[z])
            if probs.shape != (3,) or abs(probs.sum() - 1) > 1e-9 or (probs < 0).any():
                raise ConfigError(f"apoe4 probabilities of {z} must be a distribution over 0, 1, 2")


@dataclass
class SubjectTruth:
    subject_id: str
    planted_zone: str
    m0: float
    c0: float
    m_rate: float
    c_rate: float
    reverter: bool


def _stage(u, thresholds) -> int:
    t1, t2 = thresholds
    return 0 if u < t1 else (1 if u < t2 else 2)


def feature_schema(spec: CohortSpec) -> list[ColumnSpec]:
    out = []
    for prefix, group in (("mem", "memory"), ("cog", "cognition"), ("fun", "function"), ("oth", "other")):
        out += [ColumnSpec(f"{prefix}_{j:03d}", "numeric", group) for j in range(1, spec.n_features[group] + 1)]
    out += [ColumnSpec(f"cat_{j:02d}", "categorical", "other") for j in range(1, spec.n_categorical + 1)]
    return out


def _loadings(spec):
    rows = []
    for group, (a, b) in (("memory", (0.9, 0.1)), ("cognition", (0.1, 0.9)),
                          ("function", (0.5, 0.5)), ("other", (0.0, 0.0))):
        rows += [(a, b)] * spec.n_features[group]
    return np.asarray(rows, dtype=float)


def generate_cohort(spec: CohortSpec) -> tuple[Cohort, dict[str, SubjectTruth]]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_subjects
    t1, t2 = spec.thresholds
    width = len(str(n))
    ids = [f"S{i + 1:0{max(4, width)}d}" for i in range(n)]

    group = rng.choice(3, size=n, p=np.asarray(spec.group_proportions, dtype=float))
    split = rng.random(n)
    zone = np.where(group == 0, 0,
                    np.where(group == 1, np.where(split < spec.low_share_mci, 1, 2),
                             np.where(split < spec.high_share_dementia, 3, 2)))
    ages = np.empty(n)
    for g, dx in enumerate(GROUPS):
        mean, sd = spec.age_model[dx.value]
        sel = group == g
        ages[sel] = np.clip(rng.normal(mean, sd, size=sel.sum()), 50.0, 95.0)
    ages = np.round(ages, 1)
    female = rng.random(n) < spec.female_fraction
    apoe = np.array([rng.choice(3, p=spec.apoe4_probs[ZONES[z]]) for z in zone])

    m0 = np.empty(n)
    c0 = np.empty(n)
    profile = np.empty(n)
    cn_mean = spec.age_model["CN"][0]
    for i in range(n):
        center = np.asarray(spec.centers[ZONES[zone[i]]], dtype=float)
        spread = spec.profile_sd
        if zone[i] == 0:
            center = center + np.clip(spec.aging_slope * (ages[i] - cn_mean), -spec.aging_cap, spec.aging_cap)
            spread = spread * spec.control_profile_scale
        for _ in range(10000):
            z = rng.standard_normal(3)
            m, c = center + spec.latent_sd * z[:2] + spread * z[2] * np.array([0.5, -0.5])
            if m >= 0 and c >= 0 and _stage(m + c, spec.thresholds) == group[i]:
                break
        else:
            raise ConfigError(f"cannot place a {ZONES[zone[i]]} subject in diagnosis group {group[i]}")
        m0[i], c0[i], profile[i] = m, c, z[2]
    base_rates = np.asarray([spec.rates[ZONES[z]] for z in zone], dtype=float)
    tilt = np.clip(spec.profile_rate_tilt * profile, -0.9, 0.9)
    base_rates = base_rates * np.column_stack([1 + tilt, 1 - tilt])
    rates = base_rates * np.exp(spec.rate_jitter * rng.standard_normal((n, 2)))

    months = np.asarray(VISIT_MONTHS, dtype=float)
    lat = np.stack([np.outer(m0, np.ones(4)) + np.outer(rates[:, 0], months),
                    np.outer(c0, np.ones(4)) + np.outer(rates[:, 1], months)], axis=-1)  # n x visit x 2

    # reverters: lower half (by month-12 severity) of Low patients still MCI
    # and Moderate patients already demented at month 12
    u12 = lat[:, 1].sum(axis=1)
    stage12 = np.array([_stage(u, spec.thresholds) for u in u12])
    pools = []
    for z, st in ((1, 1), (2, 2)):
        idx = np.flatnonzero((zone == z) & (stage12 == st))
        if idx.size:
            pools.append(idx[u12[idx] <= np.median(u12[idx])])
    candidates = np.sort(np.concatenate(pools)) if pools else np.array([], dtype=int)
    n_rev = min(int(round(spec.reversion_fraction * np.sum(group > 0))), candidates.size)
    reverters = np.sort(rng.choice(candidates, size=n_rev, replace=False)) if n_rev else np.array([], dtype=int)
    for i in reverters:
        floor = t1 if stage12[i] == 1 else t2
        factor = (floor - 0.05) / u12[i]
        lat[i, 2] = lat[i, 1] * factor
        lat[i, 3] = lat[i, 2]
    is_rev = np.zeros(n, dtype=bool)
    is_rev[reverters] = True

    schema = feature_schema(spec)
    load = _loadings(spec)
    n_num = load.shape[0]
    offset = rng.uniform(1.0, 5.0, size=n_num)
    scale = rng.uniform(0.5, 2.0, size=n_num)
    noise_sd = np.where(load.sum(axis=1) > 0, spec.noise_sd, 0.3)
    tokens = [chr(ord("A") + t) for t in range(spec.n_tokens)]
    cats = rng.integers(0, spec.n_tokens, size=(n, spec.n_categorical))

    signal = lat @ load.T  # n x visit x n_num
    sd = np.broadcast_to(noise_sd, signal.shape)
    noise = rng.standard_normal(signal.shape) * sd
    # truncate: redraw noise wherever the observed value would go negative
    neg = offset + scale * (signal + noise) < 0
    while neg.any():
        noise[neg] = rng.standard_normal(int(neg.sum())) * sd[neg]
        neg = offset + scale * (signal + noise) < 0
    values = offset + scale * (signal + noise)
    values = np.round(values, 4)
    mask = rng.random((n, 4, len(schema))) < spec.missing_rate

    records = []
    for i in range(n):
        for v, month in enumerate(VISIT_MONTHS):
            dx = GROUPS[_stage(lat[i, v].sum(), spec.thresholds)]
            feats = [float(x) for x in values[i, v]] + [tokens[t] for t in cats[i]]
            feats = tuple(None if mask[i, v, j] else f for j, f in enumerate(feats))
            records.append(ClinicalRecord(ids[i], month, dx, float(ages[i] + month / 12.0),
                                          "F" if female[i] else "M", int(apoe[i]), feats))
    truth = {
        ids[i]: SubjectTruth(ids[i], ZONES[zone[i]], float(m0[i]), float(c0[i]),
                             float(rates[i, 0]), float(rates[i, 1]), bool(is_rev[i]))
        for i in range(n)
    }
    return Cohort(schema, records), truth


# ---------------------------------------------------------------- ground truth I/O

TRUTH_HEADER = ["subject_id", "planted_zone", "m0", "c0", "m_rate", "c_rate", "reverter"]


def write_ground_truth(truth: dict[str, SubjectTruth], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for t in truth.values():
            w.writerow([t.subject_id, t.planted_zone, repr(t.m0), repr(t.c0), repr(t.m_rate),
                        repr(t.c_rate), int(t.reverter)])


def load_ground_truth(path) -> dict[str, SubjectTruth]:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ArtifactError(f"ground-truth sidecar missing: {exc}") from None
    with fh:
        rows = list(csv.DictReader(fh))
    return {
        r["subject_id"]: SubjectTruth(r["subject_id"], r["planted_zone"], float(r["m0"]), float(r["c0"]),
                                      float(r["m_rate"]), float(r["c_rate"]), r["reverter"] == "1")
        for r in rows
    }


# ---------------------------------------------------------------- verification

@dataclass
class PlantingAgreement:
    zone_agreement: float
    high_top_tercile: float
    n: int


def best_match_agreement(truth_labels, predicted_labels) -> float:
    """Accuracy under the best one-to-one relabeling of predicted to true labels."""
    truth_labels, predicted_labels = list(truth_labels), list(predicted_labels)
    t_names = sorted(set(truth_labels), key=str)
    p_names = sorted(set(predicted_labels), key=str)
    table = np.zeros((len(t_names), len(p_names)))
    ti = {v: i for i, v in enumerate(t_names)}
    pi = {v: i for i, v in enumerate(p_names)}
    for t, p in zip(truth_labels, predicted_labels):
        table[ti[t], pi[p]] += 1
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / len(truth_labels))


def verify_planting(truth: dict[str, SubjectTruth] | None, subject_ids, zones, scores) -> PlantingAgreement:
    """Compare clustered zones and progression scores with the planted truth."""
    if truth is None:
        raise ArtifactError("no ground-truth sidecar supplied")
    subject_ids = list(subject_ids)
    missing = [s for s in subject_ids if s not in truth]
    if missing:
        raise ArtifactError(f"{len(missing)} subjects absent from the ground truth, e.g. {missing[0]}")
    planted = [truth[s].planted_zone for s in subject_ids]
    zones = [getattr(z, "value", z) for z in zones]
    agreement = best_match_agreement(planted, zones)
    scores = np.asarray(scores, dtype=float)
    n_top = int(np.ceil(len(scores) / 3))
    top = np.zeros(len(scores), dtype=bool)
    top[np.argsort(-scores, kind="stable")[:n_top]] = True
    high = np.array([p == "High" for p in planted])
    frac = float(top[high].mean()) if high.any() else float("nan")
    return PlantingAgreement(agreement, frac, len(subject_ids))
