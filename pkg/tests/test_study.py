import numpy as np
import pytest

from screenbem import assembly as asm
from screenbem import study
from screenbem.mesh import build_uniform_square_mesh
from screenbem.spaces import CONFORMING, build_space
from screenbem.study import (EnergyReference, StudyRecord,
                             extrapolate_energy_sequence, fit_rate,
                             records_from_csv, records_to_csv)


def test_extrapolation_recovers_one_term_model():
    """E_k = 1 - 2/n_k is eliminated exactly by a single Aitken step."""
    levels = (4, 8, 16)
    energies = tuple(1.0 - 2.0 / n for n in levels)
    ref = extrapolate_energy_sequence(levels, energies)
    assert ref.u_ex_sq == pytest.approx(1.0, abs=1e-12)


def test_extrapolation_constant_sequence():
    ref = extrapolate_energy_sequence((2, 4, 8), (0.3, 0.3, 0.3))
    assert ref.u_ex_sq == 0.3
    assert ref.tolerance == 0.0


def test_extrapolation_rejects_non_increasing():
    with pytest.raises(ValueError, match="increase"):
        extrapolate_energy_sequence((2, 4, 8), (0.3, 0.4, 0.35))


def test_extrapolation_tolerance_is_extrapolant_spread():
    levels = (4, 8, 16, 32)
    energies = tuple(1.0 - 2.0 / n + 0.1 / n ** 2 for n in levels)
    ref = extrapolate_energy_sequence(levels, energies)
    assert len(ref.extrapolants) == 2
    assert ref.tolerance == abs(ref.extrapolants[1] - ref.extrapolants[0])
    with pytest.raises(ValueError):
        extrapolate_energy_sequence((4, 8), energies[:2])


def test_conforming_energy_fast_path_matches_generic():
    """The translation-invariant bilinear path agrees with E^T K E."""
    for n in (4, 8):
        fast = study.conforming_energy(n, 1, 6)
        conf = build_space(build_uniform_square_mesh(n), 1, CONFORMING)
        A, rhs = asm.assemble_conforming(conf, 6)
        generic = float(rhs @ np.linalg.solve(A, rhs))
        assert fast == pytest.approx(generic, rel=1e-13)


def _mock_records(ns, fn, p=1, nu=100.0):
    return [StudyRecord(method="dg", n=n, p=p, nu=nu, dofs=n * n,
                        energy=0.0, jump_l2=0.0, err_h12=fn(n),
                        jump_rel=fn(n), jump_rel_sqrt=fn(n), wall_time=0.0)
            for n in ns]


def test_fit_rate_exact_power_law():
    recs = _mock_records((4, 8, 16, 32), lambda n: (1.0 / n) ** 0.5)
    slope, stderr = fit_rate(recs, x="h", y="err_h12")
    assert slope == pytest.approx(0.5, abs=1e-12)
    assert stderr <= 1e-12


def test_fit_rate_constant_series():
    recs = _mock_records((4, 8, 16, 32), lambda n: 0.7)
    slope, _ = fit_rate(recs, x="h")
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_in_p():
    recs = [StudyRecord(method="dg", n=2, p=p, nu=100.0, dofs=1, energy=0.0,
                        jump_l2=0.0, err_h12=p ** -1.0, jump_rel=p ** -1.0,
                        jump_rel_sqrt=0.0, wall_time=0.0)
            for p in range(1, 7)]
    slope, _ = fit_rate(recs, x="p", y="err_h12", tail=5)
    assert slope == pytest.approx(-1.0, abs=1e-12)


def test_fit_rate_validation():
    recs = _mock_records((4, 8, 16), lambda n: 1.0 / n)
    with pytest.raises(ValueError, match="at least three"):
        fit_rate(recs[:2])
    bad = _mock_records((4, 8, 16), lambda n: 0.0)
    with pytest.raises(ValueError, match="non-positive"):
        fit_rate(bad)
    with pytest.raises(ValueError, match="abscissa"):
        fit_rate(recs, x="nu")


def test_csv_roundtrip_is_exact():
    rng = np.random.default_rng(9)
    recs = [StudyRecord(method=m, n=n, p=2, nu=float(rng.uniform(0.1, 100)),
                        dofs=9 * n * n, energy=float(rng.standard_normal()),
                        jump_l2=float(rng.uniform()), err_h12=float(rng.uniform()),
                        jump_rel=float(rng.uniform()),
                        jump_rel_sqrt=float(rng.uniform()),
                        wall_time=float(rng.uniform()))
            for m in ("dg", "conforming") for n in (2, 4)]
    assert records_from_csv(records_to_csv(recs)) == recs


def test_csv_file_roundtrip(tmp_path):
    recs = _mock_records((2, 4), lambda n: 1.0 / n)
    path = tmp_path / "records.csv"
    records_to_csv(recs, path)
    assert records_from_csv(str(path)) == recs


def test_csv_rejects_foreign_header():
    with pytest.raises(ValueError, match="header"):
        records_from_csv("a,b,c\n1,2,3\n")


def test_samples_csv_shape():
    samples = [{"method": "dg", "nu": 1.0, "panel": 0,
                "x1": 0.25, "x2": 0.75, "u": 1.5}]
    text = study.samples_to_csv(samples)
    lines = text.strip().split("\n")
    assert lines[0] == "method,nu,panel,x1,x2,u"
    assert lines[1].split(",")[0] == "dg"
    assert float(lines[1].split(",")[-1]) == 1.5


def test_h_study_small_run():
    ref = EnergyReference(0.45454341369926626, (4, 8, 16, 32, 64),
                          (), (), 4.2e-4)
    recs = study.run_h_study(p_list=(1,), nu_list=(10.0,), n_list=(2, 4),
                             quad_order=4, ref=ref, conforming=True)
    dg = [r for r in recs if r.method == "dg"]
    conf = [r for r in recs if r.method == "conforming"]
    assert [r.n for r in dg] == [2, 4]
    assert [r.n for r in conf] == [2, 4]
    for r in recs:
        assert r.wall_time >= 0.0
        assert 0.0 < r.energy < ref.u_ex_sq
        assert r.err_h12 > 0.0
    assert dg[1].err_h12 < dg[0].err_h12


def test_energy_reference_dominates_galerkin_energies():
    ref = study.extrapolate_energy((4, 8, 16), 1, 6)
    assert all(ref.u_ex_sq > e for e in ref.energies)
    assert ref.u_ex == pytest.approx(np.sqrt(ref.u_ex_sq))
