"""End-to-end smoke tests for the python bindings.

Each test drives a full operation through the module surface: state
construction, evolution, best matching, walker sampling, the maximum-entropy
kernel, and checkpoint IO.
"""

import math

import numpy as np
import pytest

import edlab


def test_grid_and_array_shapes():
    g = edlab.GridSpec.uniform(2, 1, 16, 8.0)
    assert g.dim == 2
    assert g.total_points == 256
    assert g.cell_volume == pytest.approx((8.0 / 16) ** 2)

    psi = edlab.plane_wave(g, [1, 0])
    amp = psi.amp
    assert amp.shape == (16, 16)
    assert amp.dtype == np.complex128
    assert edlab.norm_squared(psi) == pytest.approx(1.0, abs=1e-12)

    x = g.axis_coordinates(0)
    assert x.shape == (16,)
    assert x[0] == pytest.approx(-4.0)

    v = edlab.potential_grid(g, edlab.ParticleSystem([1.0]),
                             edlab.PotentialSpec.external_harmonic(1.0))
    assert v.shape == (16, 16)
    assert v[0, 0] == pytest.approx(0.5 * (x[0] ** 2 + x[0] ** 2))


def test_free_packet_spreads_at_the_gaussian_rate():
    m, hbar, sigma0 = 1.3, 0.7, 1.0
    g = edlab.GridSpec.uniform(1, 1, 256, 40.0)
    sys = edlab.ParticleSystem([m], hbar)
    psi = edlab.gaussian_packet(
        g, edlab.GaussianSpec(centers=[0.0], widths=[sigma0]))

    t_star = 2.0 * m * sigma0**2 / hbar  # variance doubles here
    params = edlab.SolverParams()
    params.dt = t_star / 40
    params.steps = 40
    params.record_stride = 0
    run = edlab.evolve(psi, sys, edlab.potential_grid(g, sys, edlab.PotentialSpec.free()),
                       edlab.ShiftVelocity.zero(1), params)

    final = run.records[-1].psi
    var = edlab.position_second_moment(final, 0) - edlab.position_expectation(final, 0) ** 2
    assert var == pytest.approx(2.0 * sigma0**2, rel=1e-4)
    assert run.records[-1].obs.norm == pytest.approx(1.0, abs=1e-12)


def test_trap_evolution_conserves_norm_and_energy():
    g = edlab.GridSpec.uniform(1, 1, 128, 20.0)
    sys = edlab.ParticleSystem([1.0])
    v = edlab.potential_grid(g, sys, edlab.PotentialSpec.external_harmonic(1.0))
    psi = edlab.gaussian_packet(
        g, edlab.GaussianSpec(centers=[1.0], widths=[1.0]))

    params = edlab.SolverParams()
    params.dt = 1e-3
    params.steps = 200
    params.record_stride = 50
    run = edlab.evolve(psi, sys, v, edlab.ShiftVelocity.zero(1), params)

    energies = [rec.obs.energy for rec in run.records]
    norms = [rec.obs.norm for rec in run.records]
    assert max(abs(n - 1.0) for n in norms) < 1e-12
    assert max(abs(e - energies[0]) for e in energies) < 1e-5 * abs(energies[0])
    assert run.records[-1].obs.hermiticity_defect < 1e-10


def test_best_match_translation_recovers_packet_velocity():
    m, hbar, k = 1.3, 0.7, 0.9
    g = edlab.GridSpec.uniform(1, 1, 128, 32.0)
    sys = edlab.ParticleSystem([m], hbar)
    psi = edlab.gaussian_packet(
        g, edlab.GaussianSpec(centers=[0.0], widths=[1.0], wavevectors=[k]))

    r = edlab.best_match_translation(psi, sys)
    assert r.method == edlab.BmMethod.Analytic
    assert r.shift.lambda_dot[0] == pytest.approx(hbar * k / m, abs=1e-9)

    # boosting by the matched velocity leaves a state at rest
    rest = edlab.galilean_boost(psi, sys, [r.shift.lambda_dot[0]])
    r2 = edlab.best_match_translation(rest, sys)
    assert abs(r2.shift.lambda_dot[0]) < 1e-12


def test_walker_ensemble_relaxes_onto_a_static_density():
    g = edlab.GridSpec.uniform(1, 1, 64, 16.0)
    sys = edlab.ParticleSystem([1.0])
    psi = edlab.gaussian_packet(
        g, edlab.GaussianSpec(centers=[0.0], widths=[1.05]))
    amp = psi.amp + 0.02  # nodeless background so the log-density stays finite
    psi = edlab.WaveFunction(g, amp)
    edlab.normalize(psi)

    dt, instants = 2.5e-3, 81
    series = []
    for j in range(instants):
        s = edlab.wf_to_epistemic(psi, sys)
        s.t = dt * j
        series.append(s)

    params = edlab.SamplerParams()
    params.record_stride = 0
    ens = edlab.sample_ensemble(series, sys, edlab.ShiftVelocity.zero(1),
                                3000, 20260817, params)
    assert not ens.flagged
    assert ens.positions_at(ens.instants - 1).shape == (3000, 1)

    tail = edlab.WaveFunction(g, psi.amp, t=series[-1].t)
    report = edlab.ensemble_density_compare(ens, tail)
    assert report.tv_distance < 0.15

    # same seed, same walkers
    ens2 = edlab.sample_ensemble(series, sys, edlab.ShiftVelocity.zero(1),
                                 3000, 20260817, params)
    a = ens.positions_at(ens.instants - 1)
    b = ens2.positions_at(ens2.instants - 1)
    assert np.array_equal(a, b)


def test_maxent_kernel_matches_the_gaussian_analytics():
    alpha, dphi = 1.7, 0.8
    sigma = 1.0 / math.sqrt(alpha)
    target = dphi / alpha
    lattice = [target + sigma * (0.5 * j) for j in range(-20, 21)]
    sol = edlab.maxent_transition_oracle(
        edlab.MaxEntProblem(lattice=lattice, alpha=alpha, dphi=dphi,
                            kappa=dphi * target))
    assert sol.kl_to_analytic < 1e-8
    assert sol.mean == pytest.approx(target, abs=1e-8)
    assert sol.variance == pytest.approx(1.0 / alpha, abs=1e-6)
    assert sum(sol.p) == pytest.approx(1.0, abs=1e-12)


def test_checkpoint_roundtrip(tmp_path):
    g = edlab.GridSpec.uniform(1, 2, 96, 20.0)
    sys = edlab.ParticleSystem([1.0, 2.0], 0.7)
    psi = edlab.gaussian_packet(
        g, edlab.GaussianSpec(centers=[-0.5, 0.5], widths=[1.0, 1.0],
                              wavevectors=[0.4, -0.2]))
    psi.t = 1.25

    path = str(tmp_path / "state.edwf")
    edlab.write_checkpoint(psi, sys, path)
    back = edlab.read_checkpoint(path)
    assert back.psi.t == psi.t
    assert back.system.masses == [1.0, 2.0]
    assert back.system.hbar == 0.7
    assert np.array_equal(back.psi.amp, psi.amp)


def test_validation_guards_raise():
    g = edlab.GridSpec.uniform(1, 1, 32, 16.0)
    with pytest.raises(edlab.EdlabError):
        # width below the resolvable limit for this spacing
        edlab.gaussian_packet(g, edlab.GaussianSpec(centers=[0.0], widths=[0.1]))

    sys = edlab.ParticleSystem([1.0])
    x = g.axis_coordinates(0)
    noded = edlab.WaveFunction(g, np.sin(2 * np.pi * x / 16.0).astype(complex))
    edlab.normalize(noded)
    with pytest.raises(edlab.EdlabError):
        edlab.wf_to_epistemic(noded, sys)

    with pytest.raises(edlab.EdlabError):
        edlab.ParticleSystem([-1.0])
