import math

import numpy as np
import pytest
from scipy import optimize

from backaction import (
    ADJACENT_SITE, backaction_series, fresnel, fresnel_quadrature, refresh_time, sx_distance, sx_fresnel,
    sx_infinite_code, sx_lattice_sum, sx_long_time,
)
from data_models import BackactionRegime, CodeGeometry, CodeShape, FMParams
from errors import DomainError, GaplessDivergence
from settings import settings

INFINITE_DISK = CodeGeometry(shape=CodeShape.DISK, continuum=True, infinite=True)


class TestFresnel:
    def test_known_values(self):
        assert fresnel(0.0) == (0.0, 0.0)
        c, s = fresnel(1.0)
        assert c == pytest.approx(0.7798934, abs=1e-7)
        assert s == pytest.approx(0.4382591, abs=1e-7)
        c, s = fresnel(1e6)
        assert c == pytest.approx(0.5, abs=1e-6)
        assert s == pytest.approx(0.5, abs=1e-6)

    def test_odd(self):
        x = np.linspace(0.1, 5.0, 7)
        c, s = fresnel(x)
        c_neg, s_neg = fresnel(-x)
        np.testing.assert_allclose(c_neg, -c)
        np.testing.assert_allclose(s_neg, -s)

    def test_against_quadrature(self):
        x = np.linspace(0.0, 10.0, 1000)
        c, s = fresnel(x)
        oracle = np.array([fresnel_quadrature(v) for v in x])
        assert np.max(np.abs(c - oracle[:, 0])) <= 1e-10
        assert np.max(np.abs(s - oracle[:, 1])) <= 1e-10

    def test_sum_rises_until_first_turning_point(self):
        # d(C + S)/dx = cos + sin of pi x^2 / 2, positive for x < sqrt(3/2)
        c, s = fresnel(np.linspace(0.0, 1.2, 200))
        assert np.all(np.diff(c + s) > 0)


class TestLatticeSum:
    def test_zero_time(self, one_magnon):
        p = one_magnon.model_copy(update={"h_z": 1e-4, "Lambda": 16})
        assert sx_lattice_sum(ADJACENT_SITE, 0.0, 0.01, np.array([[0, 0]]), p) == 0.0

    def test_pulls_toward_minus_x(self, one_magnon):
        p = one_magnon.model_copy(update={"h_z": 1e-4, "Lambda": 48})
        code = CodeGeometry(size=5).plaquettes()
        values = [sx_lattice_sum(ADJACENT_SITE, t, 0.01, code, p) for t in (6.0, 10.0, 20.0)]
        assert all(v <= 0 for v in values)

    def test_errors(self, one_magnon):
        with pytest.raises(GaplessDivergence):
            sx_lattice_sum(ADJACENT_SITE, 1.0, 0.01, np.array([[0, 0]]), one_magnon)
        gapped = one_magnon.model_copy(update={"h_z": 1e-4})
        with pytest.raises(DomainError):
            sx_lattice_sum(ADJACENT_SITE, -1.0, 0.01, np.array([[0, 0]]), gapped)

    # agreement holds once J S t >= 3; earlier the nearest plaquette sees the lattice band
    @pytest.mark.parametrize("t", [6.0, 10.0, 20.0])
    def test_matches_continuum_formula(self, t):
        p = FMParams(J=1.0, S=0.5, h_z=1e-4, Lambda=48)
        geometry = CodeGeometry(shape=CodeShape.SQUARE, size=21)
        lattice = sx_lattice_sum(ADJACENT_SITE, t, 0.01, geometry.plaquettes(), p)
        continuum = sx_fresnel(ADJACENT_SITE, t, 0.01, geometry, p.model_copy(update={"h_z": 0.0}))
        assert lattice == pytest.approx(continuum, rel=0.05)


class TestContinuum:
    def test_infinite_disk_on_axis(self, one_magnon):
        for t in (1.0, 10.0, 100.0):
            value = sx_fresnel((0, 0, 0), t, 0.01, INFINITE_DISK, one_magnon)
            assert value == pytest.approx(sx_infinite_code(t, 0.01, one_magnon), rel=1e-12)

    def test_truncated_disk_converges(self, one_magnon):
        t = 10.0
        sigma = math.sqrt(4 * math.pi * one_magnon.J * one_magnon.S * t)
        disk = CodeGeometry(shape=CodeShape.DISK, size=20 * sigma, continuum=True)
        value = sx_fresnel((0, 0, 0), t, 0.01, disk, one_magnon)
        assert value == pytest.approx(sx_infinite_code(t, 0.01, one_magnon), rel=0.02)

    def test_single_plaquette_small_time(self, one_magnon):
        single = CodeGeometry(size=1)
        A = 0.01
        for t in (1e-4, 1e-3, 1e-2):
            sigma = math.sqrt(4 * math.pi * one_magnon.J * one_magnon.S * t)
            assert abs(sx_fresnel(ADJACENT_SITE, t, A, single, one_magnon)) <= A / (math.pi * one_magnon.J) * sigma

    def test_long_time_limit(self, one_magnon):
        geometry = CodeGeometry(size=3)
        limit = sx_long_time(ADJACENT_SITE, 0.01, geometry, one_magnon)
        assert sx_fresnel(ADJACENT_SITE, 1e6, 0.01, geometry, one_magnon) == pytest.approx(limit, rel=1e-2)
        assert limit < 0

    def test_far_field(self, one_magnon):
        # sigma = 1 and d^2 = 16.5 put the leading bracket at an extremum
        t = 1.0 / (4 * math.pi * one_magnon.J * one_magnon.S)
        d = math.sqrt(16.5)
        value = sx_fresnel((0, 0, d), t, 0.01, INFINITE_DISK, one_magnon)
        assert value == pytest.approx(sx_distance(t, d, 0.01, one_magnon), rel=0.02)

    def test_errors(self, one_magnon):
        with pytest.raises(DomainError):
            sx_fresnel(ADJACENT_SITE, 0.0, 0.01, CodeGeometry(size=3), one_magnon)
        with pytest.raises(DomainError):
            sx_fresnel((0, 0, 0), 1.0, 0.01, CodeGeometry(size=3), one_magnon)
        with pytest.raises(DomainError):
            sx_fresnel((1, 0, 1), 1.0, 0.01, INFINITE_DISK, one_magnon)


class TestAsymptotics:
    def test_infinite_code(self, one_magnon):
        assert sx_infinite_code(100.0, 0.01, one_magnon) == pytest.approx(-0.15958, rel=1e-4)
        assert sx_infinite_code(400.0, 0.01, one_magnon) == pytest.approx(2 * sx_infinite_code(100.0, 0.01, one_magnon))

    def test_distance_extremal_phase(self, one_magnon):
        t, A = 1.0, 0.01
        d = math.sqrt(8 * one_magnon.J * one_magnon.S * t * math.pi / 4)
        envelope = 16 * A / d ** 2 * math.sqrt(one_magnon.J * one_magnon.S ** 3 * t ** 3 / math.pi)
        assert sx_distance(t, d, A, one_magnon) == pytest.approx(math.sqrt(2) * envelope)
        with pytest.raises(DomainError):
            sx_distance(t, 0.0, A, one_magnon)

    def test_refresh_time(self, one_magnon):
        A = 0.1
        report = refresh_time(A, one_magnon)
        assert report.t_r == pytest.approx(9.817, rel=1e-4)
        assert report.t_r * A ** 2 / (one_magnon.J * one_magnon.S) == pytest.approx(math.pi / 16, rel=1e-15)
        assert report.order_of_magnitude == pytest.approx(50.0)
        crossing = optimize.brentq(lambda t: sx_infinite_code(t, A, one_magnon) + one_magnon.S, 1e-6, 100.0, xtol=1e-12)
        assert abs(crossing - report.t_r) < 1e-9
        assert refresh_time(A / 2, one_magnon).t_r == pytest.approx(4 * report.t_r)
        with pytest.raises(DomainError):
            refresh_time(0.0, one_magnon)


class TestSeries:
    def test_empty_times(self, one_magnon):
        with pytest.raises(DomainError):
            backaction_series(BackactionRegime.FRESNEL, [], 0.01, one_magnon)

    def test_one_magnon_bound_flagged(self, one_magnon):
        series = backaction_series(BackactionRegime.ASYMPTOTIC, [1.0, 5.0, 20.0, 40.0], 0.1, one_magnon,
                                   geometry=INFINITE_DISK)
        assert series.meta["form"] == "diffusive"
        assert series.valid == [True, True, False, False]
        assert series.trusted().times == [1.0, 5.0]

    def test_far_field_form(self, one_magnon):
        series = backaction_series(BackactionRegime.ASYMPTOTIC, [1.0], 0.01, one_magnon,
                                   geometry=INFINITE_DISK, site=(0, 0, 4))
        assert series.meta["form"] == "far_field"
        assert series.values[0] == pytest.approx(sx_distance(1.0, 4.0, 0.01, one_magnon))

    def test_long_time_form(self, one_magnon):
        series = backaction_series(BackactionRegime.ASYMPTOTIC, [1.0, 2.0], 0.01, one_magnon, CodeGeometry(size=3))
        assert series.meta["form"] == "long_time"
        assert series.values[0] == series.values[1]

    def test_lattice_regulator_recorded(self, one_magnon):
        p = one_magnon.model_copy(update={"Lambda": 16})
        series = backaction_series(BackactionRegime.LATTICE, [0.0, 1.0, 2.0], 0.01, p, CodeGeometry(size=3))
        assert series.meta["h_z"] == settings.BACKACTION_HZ_REGULATOR
        assert series.values[0] == 0.0
        assert all(series.valid)

    def test_fresnel_starts_at_zero(self, one_magnon):
        series = backaction_series(BackactionRegime.FRESNEL, [0.0, 1.0], 0.01, one_magnon, CodeGeometry(size=3))
        assert series.values[0] == 0.0
        assert series.values[1] < 0
