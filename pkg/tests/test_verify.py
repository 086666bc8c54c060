import pytest

from latgauss.profiles import RunConfig
from latgauss.verify import SUITES, run_suite, summarize

# invariant names promised by each module, one check per invariant
EXPECTED_NAMES = {
    # lattice core
    "lattice/unimodular-reduction", "lattice/duality-involution",
    "lattice/coset-partition", "lattice/tower-invariants",
    "lattice/superlattice-equidistribution",
    # exact oracle
    "oracle/square-identity", "oracle/mass-growth-bound", "oracle/tail-bound",
    "oracle/smoothing-ratio", "oracle/double-smoothing",
    "oracle/lambda1-eta-duality", "oracle/lambda1-brute-force",
    # base samplers
    "samplers/base-exactness-rank1-5Z", "samplers/base-exactness-rank2-skew",
    "samplers/base-exactness-rank3", "samplers/basis-independence",
    "samplers/start-gauss-short-vectors",
    # resamplers
    "resamplers/square-sqrt-inversion", "resamplers/square-output-size-law",
    "resamplers/sqrt-coin-p0.1", "resamplers/sqrt-coin-p0.5",
    "resamplers/sqrt-coin-p0.9", "resamplers/count-conservation",
    "resamplers/failure-flags",
    # combiners
    "combiners/rotation-identity", "combiners/exact-conditional-law",
    "combiners/honesty-s0.3", "combiners/honesty-s0.8", "combiners/honesty-s3.0",
    "combiners/determinism", "combiners/all-or-quota",
    # reductions
    "reductions/svp-exact-desk", "reductions/covariance-separation",
    "reductions/covariance-separation-conservative-m",
    "reductions/cvp-approximation-bound", "reductions/embedding-sanity",
    "reductions/grid-coverage",
}


def test_suite_names_unique():
    seen = set()
    for checks in SUITES.values():
        for c in checks:
            assert c.__name__ not in seen
            seen.add(c.__name__)


@pytest.mark.slow
def test_all_suite_completeness():
    cfg = RunConfig(seed=11)
    records = run_suite("all", cfg, scale=0.06)
    names = [r.name for r in records]
    assert len(names) == len(set(names)), "duplicate check names in the all suite"
    assert set(names) == EXPECTED_NAMES
    summary = summarize(records)
    assert summary["total"] == len(records)


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suite("bogus", RunConfig(seed=0))


def test_records_carry_seed_and_threshold():
    cfg = RunConfig(seed=77)
    recs = run_suite("structural", cfg, scale=0.1)
    for r in recs:
        assert r.seed == 77
        assert r.status in ("pass", "fail", "flag")
        d = r.to_dict()
        assert {"name", "status", "measured", "threshold", "seed"} <= set(d)
