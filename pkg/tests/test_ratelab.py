import numpy as np
import pytest

from gamebound import (
    InsufficientDataError,
    NoiseModel,
    PSCLIMethod,
    ValidationError,
    build_game,
    certify,
    certify_domino,
    check_domino_sparsity,
    domino_basic,
    estimate_rate,
    evaluate_bounds,
    pscli2_instance,
    pscli_lower_bound,
    random_minmax_game,
    search_violations,
    tune_step_size,
)
from gamebound.ratelab import game_hash


def diag_game(*values, b=None):
    offsets = {1: b} if b is not None else None
    return build_game([len(values)],
                      {(1, 1): np.diag(np.asarray(values, float))}, offsets)


def bilinear_game():
    return build_game([1, 1], {(1, 2): [[1.0]], (2, 1): [[-1.0]]})


class TestEstimateRate:
    def test_exact_geometric(self):
        fit = estimate_rate(0.5 ** np.arange(64))
        assert fit.rho_hat == pytest.approx(0.5, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_geometric_growth_is_measured(self):
        fit = estimate_rate(2.0 ** np.arange(32))
        assert fit.rho_hat == pytest.approx(2.0, rel=1e-12)

    def test_bounded_oscillation(self):
        t = np.arange(200)
        fit = estimate_rate(0.9**t * (2 + np.cos(t)))
        assert 0.88 <= fit.rho_hat <= 0.92

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            estimate_rate(0.5 ** np.arange(10))

    def test_floor_trimming(self):
        # decays to the floor after ~23 steps; only those points are usable
        d = 0.25 ** np.arange(100, dtype=float)
        fit = estimate_rate(d)
        assert fit.rho_hat == pytest.approx(0.25, rel=1e-9)
        assert fit.window[1] < 40

    def test_all_zero_insufficient(self):
        with pytest.raises(InsufficientDataError):
            estimate_rate(np.zeros(64))


class TestPscliLowerBound:
    def test_values(self):
        assert pscli_lower_bound(1, 1) == 0.0
        assert pscli_lower_bound(9, 1) == pytest.approx(0.8)
        assert pscli_lower_bound(9, 2) == pytest.approx(0.5)

    def test_monotonicity(self):
        kappas = np.arange(1, 101, dtype=float)
        for p in (1, 2, 3, 4):
            values = [pscli_lower_bound(k, p) for k in kappas]
            assert all(b >= a for a, b in zip(values, values[1:]))
        for k in kappas[1:]:
            values = [pscli_lower_bound(k, p) for p in (1, 2, 3, 4)]
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_rejects_bad_kappa(self):
        with pytest.raises(ValidationError):
            pscli_lower_bound(0.5, 1)
        with pytest.raises(ValidationError):
            pscli_lower_bound(2.0, 0)


class TestEvaluateBounds:
    def test_bilinear(self):
        entries = {e.name: e for e in evaluate_bounds(bilinear_game(), 1)}
        assert entries["pscli_n"].value == pytest.approx(0.0)
        assert entries["pscli_n"].kappa == pytest.approx(1.0)
        assert entries["domino_basic"].value is None
        assert "mu1*mu2" in entries["domino_basic"].reason
        assert entries["domino_improved"].kappa == pytest.approx(1.0)
        assert entries["domino_improved"].value == pytest.approx(0.0)

    def test_domino_instance_certified_mode(self):
        inst = domino_basic(1, 1, 1, 64)
        entries = {e.name: e for e in
                   evaluate_bounds(inst.game, 1, instance=inst)}
        assert entries["domino_basic"].mode == "certified"
        assert entries["domino_basic"].value == pytest.approx(inst.chi, rel=1e-12)
        assert entries["domino_basic"].binding

    def test_tightness_instance(self):
        inst = pscli2_instance(4, 4, 2, 2, 0, 1)
        entries = {e.name: e for e in evaluate_bounds(inst.game, 1)}
        assert entries["pscli_n"].value == pytest.approx(1 / 3)
        assert entries["table1_cell"].kappa == 1.5
        assert entries["table1_cell"].value == pytest.approx(0.2)
        assert entries["table1_cell"].binding

    def test_class_bound_not_binding_when_kappa_exceeds_game(self, rng):
        # singular-direction diagonal blocks inflate the domino kappa past
        # the game's own conditioning; the entry downgrades to informational
        children = np.random.SeedSequence(1).spawn(1)
        game = random_minmax_game((4, 4), np.random.default_rng(children[0]))
        entries = {e.name: e for e in evaluate_bounds(game, 1)}
        assert entries["domino_improved"].kappa > entries["pscli_n"].kappa
        assert not entries["domino_improved"].binding

    def test_one_player_only_spectral_entry(self):
        entries = evaluate_bounds(diag_game(1, 9), 1)
        assert [e.name for e in entries] == ["pscli_n"]


class TestCertify:
    def test_tuned_gd_tightness(self):
        g = diag_game(1, 9, b=[1.0, -2.0])
        tuned = tune_step_size(PSCLIMethod("simultaneous-gd", eta=1.0), g)
        report = certify(PSCLIMethod("simultaneous-gd", eta=tuned.eta), g,
                         np.array([3.0, 1.0]), 400)
        assert report.certifying
        assert report.rho_hat == pytest.approx(0.8, abs=2e-2)
        assert report.rho_asym == pytest.approx(0.8, abs=1e-10)
        assert report.asym_consistent
        assert report.all_respected
        entry = report.bounds[0]
        assert entry.name == "pscli_n"
        assert abs(entry.margin) <= 2e-2

    def test_domino_certified_run(self):
        inst = domino_basic(1, 1, 1, 256)
        tuned = tune_step_size(PSCLIMethod("extragradient", eta=1.0), inst.game)
        report = certify(PSCLIMethod("extragradient", eta=tuned.eta), inst.game,
                         np.zeros(512), 200, instance=inst)
        assert report.all_respected
        entries = {e.name: e for e in report.bounds}
        assert entries["domino_basic"].mode == "certified"
        assert report.rho_hat >= inst.chi - 2e-2

    def test_divergence_respects_bounds(self):
        report = certify(PSCLIMethod("simultaneous-gd", eta=0.4), bilinear_game(),
                         np.array([1.0, 0.0]), 400)
        assert not report.certifying  # no convergent step exists
        assert report.rho_hat is None or report.rho_hat > 1
        assert report.all_respected

    def test_report_json_shape(self):
        g = diag_game(1, 9, b=[1.0, -2.0])
        report = certify(PSCLIMethod("simultaneous-gd", eta=0.2), g,
                         np.array([3.0, 1.0]), 100)
        obj = report.to_json()
        assert set(obj) >= {"method", "game_hash", "rho_hat", "rho_asym", "r2",
                            "bounds", "tolerance", "seed", "diverged"}
        assert obj["bounds"][0]["name"] == "pscli_n"
        assert isinstance(obj["game_hash"], str) and len(obj["game_hash"]) == 16

    def test_alternating_distinct_eta_not_spectrally_bound(self, rng):
        # distinct per-player steps leave the one-pass sweep outside the
        # scalar-inversion family, so its spectral entry is informational
        g = random_minmax_game((2, 2), rng)
        m = PSCLIMethod("alternating-gd", eta=(0.02, 0.05))
        report = certify(m, g, rng.standard_normal(4), 64)
        entry = {e.name: e for e in report.bounds}["pscli_n"]
        assert entry.verdict == "informational"
        shared = certify(PSCLIMethod("alternating-gd", eta=0.03), g,
                         rng.standard_normal(4), 64)
        assert {e.name: e for e in shared.bounds}["pscli_n"].verdict != "informational"

    def test_rho_hat_tracks_rho_asym(self, rng):
        # smaller-scale version of the oracle-equivalence acceptance check
        count = 0
        while count < 10:
            g = random_minmax_game((2, 2), rng)
            tuned = tune_step_size(PSCLIMethod("extragradient", eta=1.0), g)
            if not tuned.convergent or not 0.2 <= tuned.rho <= 0.95:
                continue
            report = certify(PSCLIMethod("extragradient", eta=tuned.eta), g,
                             rng.standard_normal(g.d), 400)
            if report.r_squared is None or report.r_squared < 0.99:
                continue
            assert abs(report.rho_hat - report.rho_asym) <= 2e-2
            count += 1


class TestDominoCertification:
    def test_per_iterate_bound(self):
        inst = domino_basic(1, 1, 1, 128)
        for variant in ("simultaneous-gd", "extragradient"):
            tuned = tune_step_size(PSCLIMethod(variant, eta=1.0), inst.game)
            cert = certify_domino(inst, PSCLIMethod(variant, eta=tuned.eta))
            assert cert.ok, cert.failures
            assert cert.horizon == 32

    def test_sparsity_checker(self):
        inst = domino_basic(1, 1, 1, 64)
        ok, first_bad = check_domino_sparsity(
            inst, PSCLIMethod("extragradient", eta=0.3), 25)
        assert ok and first_bad is None


class TestSearchViolations:
    def test_zero_trials(self):
        assert search_violations(seed=1, trials=0, dims=(3, 3)) == []

    def test_known_tight_instance_clean(self):
        # single diagonal min-max trial: tuned GD sits exactly on the bound
        violations = search_violations(seed=5, trials=3, dims=(2, 2), p=1)
        assert violations == []

    def test_deterministic_given_seed(self):
        a = search_violations(seed=9, trials=4, dims=(3, 3), p=1)
        b = search_violations(seed=9, trials=4, dims=(3, 3), p=1)
        assert a == b


class TestGameHash:
    def test_stable_and_distinct(self):
        g1 = diag_game(1, 9)
        g2 = diag_game(1, 9)
        g3 = diag_game(1, 8)
        assert game_hash(g1) == game_hash(g2)
        assert game_hash(g1) != game_hash(g3)
