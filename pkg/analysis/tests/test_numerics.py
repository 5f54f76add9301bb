import math

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from analysis.exceptions import StatisticsInputError
from analysis.services.numerics import (
    chi2_cdf,
    chi2_sf,
    f_cdf,
    f_isf,
    f_sf,
    noncentral_f_cdf,
    noncentral_f_sf,
    normal_cdf,
    normal_ppf,
    regularized_beta,
    regularized_gamma_q,
    studentized_range_isf,
    studentized_range_sf,
    t_sf,
)
from analysis.tests.oracles import (
    chi2_sf_oracle,
    regularized_beta_oracle,
    studentized_range_cdf_oracle,
)


class NormalTests(SimpleTestCase):

    def test_cdf_and_ppf(self):
        self.assertAlmostEqual(normal_cdf(0.0).value, 0.5, places=15)
        self.assertAlmostEqual(normal_cdf(1.959963984540054).value, 0.975, places=12)
        for p in (1e-10, 0.001, 0.025, 0.5, 0.8, 0.999999):
            self.assertAlmostEqual(normal_ppf(p), stats.norm.ppf(p), delta=1e-9 * max(1.0, abs(stats.norm.ppf(p))))

    def test_ppf_domain(self):
        with self.assertRaises(StatisticsInputError):
            normal_ppf(1.0)


class GammaBetaTests(SimpleTestCase):

    def test_chi_square_critical_value(self):
        self.assertAlmostEqual(chi2_sf(3.841, 1).value, 0.05, delta=1e-3)
        self.assertAlmostEqual(chi2_sf(3.841, 1).value + chi2_cdf(3.841, 1).value, 1.0, places=14)

    def test_chi_square_against_quadrature(self):
        for x, df in ((0.5, 1), (19.24, 1), (130.02, 1), (7.0, 4), (45.0, 30)):
            expected = chi2_sf_oracle(x, df)
            self.assertAlmostEqual(chi2_sf(x, df).value, expected, delta=max(1e-12, 1e-8 * expected))

    def test_gamma_edges(self):
        self.assertEqual(regularized_gamma_q(2.0, 0.0).value, 1.0)
        with self.assertRaises(StatisticsInputError):
            regularized_gamma_q(0.0, 1.0)

    def test_beta_against_quadrature(self):
        for x, a, b in ((0.3, 2.0, 5.0), (0.05, 10.0, 3.0), (0.6, 50.0, 40.0)):
            self.assertAlmostEqual(regularized_beta(x, a, b).value, regularized_beta_oracle(x, a, b), delta=1e-10)
        arcsine = 2.0 / math.pi * math.asin(math.sqrt(0.9))
        self.assertAlmostEqual(regularized_beta(0.9, 0.5, 0.5).value, arcsine, delta=1e-12)
        self.assertEqual(regularized_beta(0.0, 2.0, 3.0).value, 0.0)
        self.assertEqual(regularized_beta(1.0, 2.0, 3.0).value, 1.0)

    def test_t_and_f(self):
        self.assertAlmostEqual(t_sf(2.0, 10).value, stats.t.sf(2.0, 10), delta=1e-12)
        self.assertAlmostEqual(t_sf(-2.0, 10).value, stats.t.sf(-2.0, 10), delta=1e-12)
        self.assertAlmostEqual(t_sf(2.0, 1e4).value, stats.t.sf(2.0, 1e4), delta=1e-10)
        self.assertAlmostEqual(t_sf(2.0, 1e4).value, normal_cdf(-2.0).value, delta=1e-4)
        self.assertAlmostEqual(f_sf(8.64, 2, 6).value, stats.f.sf(8.64, 2, 6), delta=1e-12)
        self.assertAlmostEqual(f_cdf(1.5, 3, 96).value, stats.f.cdf(1.5, 3, 96), delta=1e-12)
        self.assertAlmostEqual(f_sf(1e3, 1, 1996).value, stats.f.sf(1e3, 1, 1996),
                               delta=1e-6 * stats.f.sf(1e3, 1, 1996))

    def test_f_isf(self):
        self.assertAlmostEqual(f_isf(0.01, 3, 1996), stats.f.isf(0.01, 3, 1996), delta=1e-8)
        with self.assertRaises(StatisticsInputError):
            f_isf(0.0, 3, 10)


class NoncentralFTests(SimpleTestCase):

    def test_zero_noncentrality_is_central(self):
        for x in np.linspace(0.05, 10.0, 100):
            self.assertAlmostEqual(noncentral_f_cdf(x, 3, 20, 0.0).value, f_cdf(x, 3, 20).value, delta=1e-10)

    def test_against_scipy(self):
        for x, df1, df2, nc in ((2.0, 3, 20, 5.0), (3.8, 1, 1996, 80.0), (1.2, 4, 50, 0.5)):
            self.assertAlmostEqual(noncentral_f_cdf(x, df1, df2, nc).value, stats.ncf.cdf(x, df1, df2, nc),
                                   delta=1e-8)
            self.assertAlmostEqual(noncentral_f_sf(x, df1, df2, nc).value, stats.ncf.sf(x, df1, df2, nc),
                                   delta=1e-8)

    def test_negative_noncentrality(self):
        with self.assertRaises(StatisticsInputError):
            noncentral_f_cdf(1.0, 2, 10, -1.0)


class StudentizedRangeTests(SimpleTestCase):

    def test_critical_value(self):
        self.assertAlmostEqual(studentized_range_isf(0.05, 3, 10), 3.877, delta=0.01)

    def test_against_quadrature(self):
        for q, k, df in ((3.0, 3, 10), (4.5, 4, 20.5), (2.2, 2, 6)):
            expected = 1.0 - studentized_range_cdf_oracle(q, k, df)
            self.assertAlmostEqual(studentized_range_sf(q, k, df).value, expected, delta=1e-6)

    def test_degrees_of_freedom_between_one_and_two(self):
        # Welch-Satterthwaite df for a pair of two-observation groups lands here
        for df in (1.2, 1.5, 1.8):
            for q, k in ((1.0, 2), (3.0, 3), (10.0, 4)):
                expected = 1.0 - studentized_range_cdf_oracle(q, k, df)
                result = studentized_range_sf(q, k, df)
                self.assertAlmostEqual(result.value, expected, delta=1e-6)
                self.assertLessEqual(result.achieved_abs_error_bound, 1e-9)

    def test_two_groups_match_two_sided_t(self):
        t, df = 2.3, 7.5
        two_sided = 2.0 * stats.t.sf(t, df)
        self.assertAlmostEqual(studentized_range_sf(t * math.sqrt(2.0), 2, df).value, two_sided, delta=1e-6)

    def test_error_bound_reported(self):
        result = studentized_range_sf(3.5, 3, 12)
        self.assertLessEqual(result.achieved_abs_error_bound, 1e-9)
        self.assertEqual(studentized_range_sf(0.0, 3, 12).value, 1.0)
