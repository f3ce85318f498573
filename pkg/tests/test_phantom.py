import math

import mpmath
import numpy as np
import pytest

from topomask.errors import ParameterError
from topomask.phantom import (AIR, BREAST_TISSUES, COMPOSITION, FAT, GLANDULAR, PROFILES, TISSUES, MRIParams,
                              PhantomVolume, composition_stats, generate_phantom, sample_relaxation, simulate_mri,
                              spgr_signal, tissue_mask)


def mp_signal(t1, t2, k=1, alpha=6, tr=50, te=10):
    mpmath.mp.dps = 50
    a = mpmath.radians(alpha)
    e1 = mpmath.exp(-mpmath.mpf(tr) / t1)
    return k * mpmath.sin(a) * (1 - e1) / (1 - mpmath.cos(a) * e1) * mpmath.exp(-mpmath.mpf(te) / t2)


def test_fat_signal_matches_high_precision():
    ref = float(mp_signal(mpmath.mpf("366.78"), mpmath.mpf("52.96")))
    assert ref == pytest.approx(0.08342, abs=1e-5)  # quoted to four figures
    assert abs(spgr_signal(366.78, 52.96) - ref) < 1e-12


def test_signal_limits():
    assert spgr_signal(1e-9, 1e9, te=0) == pytest.approx(math.sin(math.radians(6)), rel=1e-12)
    assert spgr_signal(1e-9, 1e9, te=0) == pytest.approx(0.104528, abs=1e-6)
    assert spgr_signal(500, 50, flip_angle=0) == 0
    with pytest.raises(ParameterError):
        spgr_signal(-1, 50)


def test_signal_monotone(rng):
    for _ in range(200):
        t1, t2 = rng.uniform(50, 3000), rng.uniform(5, 300)
        kw = dict(flip_angle=rng.uniform(1, 89), tr=rng.uniform(5, 500), te=rng.uniform(1, 50))
        s = spgr_signal(t1, t2, **kw)
        assert spgr_signal(t1 * 1.001, t2, **kw) < s < spgr_signal(t1, t2 * 1.001, **kw)
        assert 0 <= s <= 1


def test_mri_params_validation():
    for bad in (dict(flip_angle=0), dict(flip_angle=90), dict(tr=0), dict(te=-1)):
        with pytest.raises(ParameterError):
            MRIParams(**bad)


def test_tables_are_consistent():
    for name in TISSUES:
        r = BREAST_TISSUES.rows[name]
        assert r.t2_mean <= r.t1_mean
    for prof in PROFILES:
        assert sum(COMPOSITION[prof]) == pytest.approx(100, abs=0.05)


@pytest.mark.parametrize("profile", PROFILES)
def test_composition_close_to_target(profile):
    stats = composition_stats(generate_phantom(profile, 64, 3))
    target = dict(zip(TISSUES, COMPOSITION[profile]))
    for name in ("fat", "glandular", "muscle", "skin"):
        assert abs(100 * stats[name] - target[name]) <= 5
    assert sum(stats.values()) == pytest.approx(1, abs=1e-12)


def test_determinism_and_seed_dependence():
    a = generate_phantom("hetero", 48, 11)
    b = generate_phantom("hetero", 48, 11)
    c = generate_phantom("hetero", 48, 12)
    assert np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.labels, c.labels)


def test_phantom_errors():
    with pytest.raises(ParameterError):
        generate_phantom("dense", 16)
    with pytest.raises(ParameterError):
        generate_phantom("lumpy", 64)


def test_non_cubic_grid():
    p = generate_phantom("scattered", (40, 36, 48), 0)
    assert p.dims == (40, 36, 48)
    assert (p.labels == AIR).any() and (p.labels == GLANDULAR).any()


def test_composition_stats_simple():
    lab = np.zeros((2, 2, 2), np.uint8)
    assert composition_stats(PhantomVolume(lab))["fat"] == 1.0
    lab[0] = GLANDULAR
    st = composition_stats(PhantomVolume(lab))
    assert st["fat"] == 0.5 and st["glandular"] == 0.5


def test_relaxation_sampling():
    exact = sample_relaxation(BREAST_TISSUES.with_zero_std(), 5)
    assert exact[FAT] == (366.78, 52.96)
    a, b = sample_relaxation(seed=1), sample_relaxation(seed=1)
    assert a == b
    for seed in range(50):
        draws = sample_relaxation(seed=seed)
        for label, (t1, t2) in draws.items():
            r = BREAST_TISSUES[label]
            assert abs(t1 - r.t1_mean) <= 3 * r.t1_std + 1e-9 and t1 >= 1
            assert abs(t2 - r.t2_mean) <= 3 * r.t2_std + 1e-9 and t2 >= 1


def test_simulate_mri_shares_values_per_tissue():
    p = generate_phantom("dense", 32, 0)
    relax = sample_relaxation(seed=0)
    mr = simulate_mri(p, relax)
    assert np.all(mr.data[p.labels == AIR] == 0)
    for label in np.unique(p.labels):
        if label != AIR:
            vals = np.unique(mr.data[p.labels == label])
            assert vals.size == 1 and vals[0] == pytest.approx(spgr_signal(*relax[label]))


def test_tissue_mask():
    lab = np.arange(11, dtype=np.uint8).reshape(11, 1, 1)
    m = tissue_mask(PhantomVolume(lab)).bits.ravel()
    assert [TISSUES[i] for i in np.flatnonzero(m)] == ["glandular", "tdlu", "duct", "artery", "vein"]
