import numpy as np
import pytest

from rsbeam import mulp, sca
from rsbeam.model import CsitModel, SecrecySpec, random_channels, specific_channels

POWER = 100.0


class TestMulpRestriction:
    def test_common_stream_pinned_to_zero(self):
        channels = random_channels(2, 2, seed=1)
        spec = SecrecySpec.uniform(0.1, [0.5, 0.5])
        sol = mulp.solve_mulp_wsr(channels, spec, POWER)
        assert np.all(sol.common == 0)
        assert np.all(sol.common_rate == 0)
        assert sol.scheme == "mulp"

    def test_orthogonal_channels_rs_at_least_mulp(self):
        channels = specific_channels(1.0, np.pi)  # h1 orthogonal to h2
        spec = SecrecySpec.uniform(0.0, [0.5, 0.5])
        # orthogonal channels make RS and MULP coincide; compare at a tight
        # stopping tolerance so convergence slack cannot mask the nesting
        options = sca.SolveOptions(epsilon=1e-6)
        rs = sca.solve_wsr(channels, spec, POWER, options)
        mu = mulp.solve_mulp_wsr(channels, spec, POWER, options)
        assert rs.wsr >= mu.wsr - 1e-6
        # orthogonal channels: MULP reaches the interference-free rates
        gains = np.linalg.norm(channels.gains, axis=1) ** 2
        per_user = np.log2(1 + 0.5 * POWER * gains)
        assert mu.wsr >= 0.5 * per_user.sum() - 1e-3

    def test_nesting_pointwise_over_thresholds(self):
        channels = specific_channels(1.0, 2 * np.pi / 9)
        for th in (0.0, 0.25, 0.5):
            spec = SecrecySpec.uniform(th, [0.5, 0.5])
            rs = sca.solve_wsr(channels, spec, POWER)
            mu = mulp.solve_mulp_wsr(channels, spec, POWER)
            assert rs.wsr >= mu.wsr - 1e-6

    def test_equal_strength_symmetric_powers(self):
        # equal channel strengths: optimized private powers match within 2%
        channels = specific_channels(1.0, 2 * np.pi / 9)
        spec = SecrecySpec.uniform(0.1, [0.5, 0.5])
        sol = mulp.solve_mulp_wsr(channels, spec, POWER)
        powers = np.sum(np.abs(sol.private) ** 2, axis=0)
        assert abs(powers[0] - powers[1]) / powers.max() <= 0.02

    def test_imperfect_restriction(self):
        est = random_channels(2, 4, seed=5)
        spec = SecrecySpec.uniform(0.1, [0.5, 0.5])
        model = CsitModel.from_quality(est, 1.0, 0.6, POWER)
        sol = mulp.solve_mulp_wesr(model, spec, POWER, n_samples=50)
        assert np.all(sol.common == 0)
        assert np.all(sol.common_rate == 0)
        assert sol.feasible

    def test_imperfect_aligned_channels_infeasible_for_mulp(self):
        # strongly aligned estimates plus channel-error leakage leave no room
        # for both users' secrecy margins without a common stream
        est = random_channels(2, 2, seed=5)  # alignment ~0.98
        spec = SecrecySpec.uniform(0.1, [0.5, 0.5])
        model = CsitModel.from_quality(est, 1.0, 0.6, POWER)
        with pytest.raises(sca.InfeasibleThresholds):
            mulp.solve_mulp_wesr(model, spec, POWER, n_samples=50)
