#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <variant>
#include <vector>

#include "preamp/kernels.hpp"
#include "preamp/priors.hpp"
#include "preamp/retrodict.hpp"

using namespace preamp;

namespace {

double flat_limit_fidelity0(double eta, double gain) {
  return eta * gain / (1.0 + eta * (gain - 1.0));
}

}  // namespace

TEST_CASE("perfect detector retrodicts with certainty", "[retrodict]") {
  const auto prior = prior_from_values({0.2, 0.3, 0.1, 0.4});
  const auto kernel = identity_kernel(4);
  for (std::size_t n = 0; n < 4; ++n) {
    const auto report = retrodict(prior, kernel, n);
    REQUIRE_THAT(report.fidelity, Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(report.count_probability,
                 Catch::Matchers::WithinAbs(prior[n], 1e-15));
    for (std::size_t m = 0; m < 4; ++m) {
      REQUIRE(report.posterior[m] == (m == n ? 1.0 : 0.0));
    }
    REQUIRE_THAT(report.posterior_mean,
                 Catch::Matchers::WithinAbs(static_cast<double>(n), 1e-12));
  }
}

TEST_CASE("flat-prior F_r(0) anchors and closed form", "[retrodict]") {
  SECTION("eta=0.8, G=10 gives 0.9756") {
    const auto conv = converged_retrodict(PriorFamily::flat, {10.0, 0.8, 0.0}, 0);
    REQUIRE(conv.converged);
    REQUIRE_THAT(conv.report.fidelity,
                 Catch::Matchers::WithinAbs(0.97560975609756, 1e-9));
  }
  SECTION("eta=0.9, G=10 gives 0.989") {
    const auto conv = converged_retrodict(PriorFamily::flat, {10.0, 0.9, 0.0}, 0);
    REQUIRE_THAT(conv.report.fidelity,
                 Catch::Matchers::WithinAbs(0.98901098901099, 1e-9));
  }
  SECTION("F_r(0) = eta G / (1 + eta(G-1)) across the grid") {
    for (double eta : {0.3, 0.5, 0.7, 0.9}) {
      for (double gain : {1.0, 2.0, 5.0, 16.0}) {
        const auto conv =
            converged_retrodict(PriorFamily::flat, {gain, eta, 0.0}, 0);
        REQUIRE_THAT(conv.report.fidelity,
                     Catch::Matchers::WithinAbs(
                         flat_limit_fidelity0(eta, gain), 1e-6));
      }
    }
  }
  SECTION("a cutoff of 199 already sits at the infinite-prior limit for "
          "eta >= 0.5") {
    const auto prior = flat_prior(199);
    for (double eta : {0.5, 0.7, 0.9}) {
      for (double gain : {1.0, 4.0, 16.0}) {
        const double f = retrodict_chain(prior, {gain, eta, 0.0}, 0).fidelity;
        REQUIRE_THAT(f, Catch::Matchers::WithinAbs(
                            flat_limit_fidelity0(eta, gain), 1e-6));
      }
    }
  }
}

TEST_CASE("two-photon prior closed form for 1 - F_r(0)", "[retrodict]") {
  const auto prior = two_photon_generator_prior();
  for (double eta : {0.2, 0.5, 0.8, 0.95}) {
    for (double gain : {1.0, 2.0, 8.0, 16.0}) {
      const double D = 1.0 + eta * (gain - 1.0);
      const double expected =
          (1.0 - eta) * (1.0 - eta) / (D * D + (1.0 - eta) * (1.0 - eta));
      const auto report = retrodict_chain(prior, {gain, eta, 0.0}, 0);
      REQUIRE_THAT(1.0 - report.fidelity,
                   Catch::Matchers::WithinRel(expected, 1e-10));
    }
  }
}

TEST_CASE("impossible outcomes are a typed error", "[retrodict]") {
  const auto prior = prior_from_values({1.0});  // vacuum only
  // perfect chain cannot produce one count from vacuum
  const auto kernel = identity_kernel(3);
  REQUIRE_THROWS_AS(retrodict(prior, kernel, 1), impossible_outcome_error);
  try {
    retrodict(prior, kernel, 2);
  } catch (const impossible_outcome_error& e) {
    REQUIRE(e.outcome() == 2);
  }
}

TEST_CASE("outcome beyond the prior support has zero fidelity", "[retrodict]") {
  const auto prior = prior_from_values({0.5, 0.5});
  const auto report = retrodict_chain(prior, {8.0, 0.6, 0.0}, 5);
  REQUIRE(report.fidelity == 0.0);
  REQUIRE(report.count_probability > 0.0);
  detail::KahanSum s;
  for (double p : report.posterior) s.add(p);
  REQUIRE_THAT(s.value(), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("preconditions on retrodict", "[retrodict]") {
  const auto prior = flat_prior(9);
  const auto kernel = identity_kernel(4);
  REQUIRE_THROWS_AS(retrodict(prior, kernel, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(retrodict(prior, kernel, 0), std::invalid_argument);
}

TEST_CASE("Bayes consistency and posterior normalization",
          "[retrodict][property]") {
  std::mt19937 rng(90210);
  std::uniform_real_distribution<double> eta_d(0.05, 1.0);
  std::uniform_real_distribution<double> gain_d(1.0, 12.0);
  std::uniform_int_distribution<std::size_t> dim_d(1, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const double eta = eta_d(rng);
    const double gain = gain_d(rng);
    const std::size_t dim = dim_d(rng);
    std::vector<double> raw(dim);
    for (double& v : raw) v = eta_d(rng);
    const auto prior = prior_from_values(raw);
    const auto amp = amplifier_kernel(gain, dim, 1e-11);
    const auto kernel =
        compose(attenuator_kernel(eta, amp.output_dim(), amp.output_dim()), amp);

    // sum of count probabilities + prior-weighted deficit = 1
    detail::KahanSum total;
    for (std::size_t n = 0; n < kernel.output_dim(); ++n) {
      total.add(count_probability(prior, kernel.row(n)));
    }
    for (std::size_t m = 0; m < dim; ++m) {
      total.add(prior[m] * kernel.column_deficit(m));
    }
    REQUIRE_THAT(total.value(), Catch::Matchers::WithinAbs(1.0, 1e-10));

    const auto report = retrodict(prior, kernel, 0);
    detail::KahanSum psum;
    for (double p : report.posterior) psum.add(p);
    REQUIRE_THAT(psum.value(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(report.fidelity >= 0.0);
    REQUIRE(report.fidelity <= 1.0);
    REQUIRE_THAT(report.fidelity,
                 Catch::Matchers::WithinAbs(report.posterior[0], 0.0));
  }
}

TEST_CASE("outcome-0 flat posterior is geometric and obeys the duality",
          "[retrodict]") {
  for (double eta : {0.3, 0.5, 0.8}) {
    for (double gain : {1.0, 2.0, 10.0}) {
      const auto conv =
          converged_retrodict(PriorFamily::flat, {gain, eta, 0.0}, 0);
      const double r = (1.0 - eta) / (1.0 + eta * (gain - 1.0));
      const auto& post = conv.report.posterior;
      for (std::size_t m = 0; m + 1 < 12; ++m) {
        REQUIRE_THAT(post[m + 1] / post[m],
                     Catch::Matchers::WithinRel(r, 1e-9));
      }
      // retrodicting through gain G looks like attenuating by 1/G backwards:
      // the posterior mean is 1/G of the gain-free posterior mean
      const auto base =
          converged_retrodict(PriorFamily::flat, {1.0, eta, 0.0}, 0);
      REQUIRE_THAT(conv.report.posterior_mean,
                   Catch::Matchers::WithinRel(
                       base.report.posterior_mean / gain, 1e-6));
    }
  }
}

TEST_CASE("posterior mean scaling check", "[retrodict]") {
  SECTION("G = 1 leaves the mean unchanged") {
    const auto check = posterior_mean_scaling_check(0.6, 1.0);
    REQUIRE(check.mean_with_gain == check.mean_without_gain);
  }
  SECTION("eta=0.5, G=10: mean drops from 1.0 to 0.1") {
    const auto check = posterior_mean_scaling_check(0.5, 10.0);
    REQUIRE_THAT(check.mean_without_gain,
                 Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(check.mean_with_gain, Catch::Matchers::WithinAbs(0.1, 1e-9));
  }
  SECTION("probability piles up on vacuum at eta=0.5, G=10") {
    const auto conv =
        converged_retrodict(PriorFamily::flat, {10.0, 0.5, 0.0}, 0);
    REQUIRE(conv.report.posterior[0] > 0.9);
  }
}

TEST_CASE("F_r(0) never drops when the gain rises", "[retrodict]") {
  for (double eta : {0.2, 0.6, 0.9}) {
    double last = 0.0;
    for (double gain : {1.0, 1.5, 2.0, 4.0, 9.5, 16.0}) {
      const auto conv =
          converged_retrodict(PriorFamily::flat, {gain, eta, 0.0}, 0);
      REQUIRE(conv.report.fidelity >= last - 1e-12);
      last = conv.report.fidelity;
    }
  }
}

TEST_CASE("one-count gain threshold", "[retrodict]") {
  SECTION("flat prior crosses near 0.75") {
    const std::vector<double> etas{0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
    const double threshold = one_count_threshold(1e-3, etas, flat_prior(800));
    REQUIRE(threshold > 0.6);
    REQUIRE(threshold < 0.8);
  }
  SECTION("vacuum-free prior always improves") {
    const std::vector<double> etas{0.1, 0.3, 0.5, 0.7, 0.9};
    try {
      one_count_threshold(1e-3, etas, nonzero_flat_prior(400));
      FAIL("expected no_sign_change_error");
    } catch (const no_sign_change_error& e) {
      REQUIRE(e.always_positive());
      REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("always positive"));
    }
  }
  SECTION("two-photon prior, outcome 0: any extra gain helps") {
    const auto prior = two_photon_generator_prior();
    for (double eta : {0.3, 0.7, 0.95}) {
      const double before = retrodict_chain(prior, {1.0, eta, 0.0}, 0).fidelity;
      const double after =
          retrodict_chain(prior, {1.001, eta, 0.0}, 0).fidelity;
      REQUIRE(after > before);
    }
  }
  SECTION("bad grids are rejected") {
    REQUIRE_THROWS_AS(
        one_count_threshold(1e-3, std::vector<double>{0.5}, flat_prior(10)),
        std::invalid_argument);
    REQUIRE_THROWS_AS(one_count_threshold(0.0, std::vector<double>{0.2, 0.8},
                                          flat_prior(10)),
                      std::invalid_argument);
  }
}

TEST_CASE("dark counts leave F_r(0) untouched", "[retrodict]") {
  const auto prior = flat_prior(400);
  SECTION("lambda = 0 trivially identical") {
    const auto check = dark_count_invariance_check({10.0, 0.8, 0.0}, prior);
    REQUIRE(check.fidelity_with_dark == check.fidelity_without_dark);
  }
  SECTION("lambda in {0.1, 0.5, 1.0}") {
    for (double lambda : {0.1, 0.5, 1.0}) {
      const auto check =
          dark_count_invariance_check({10.0, 0.8, lambda}, prior);
      REQUIRE(std::abs(check.fidelity_with_dark - check.fidelity_without_dark) <
              1e-12);
    }
  }
}

TEST_CASE("a small dark rate can help one-count retrodiction for vacuum-free "
          "arms",
          "[retrodict]") {
  // recorded 1 count with a dark event present means 0 real counts, and for a
  // vacuum-free arm the zero-count retrodiction concentrates on m = 1
  const auto prior = nonzero_flat_prior(400);
  const double with_dark = retrodict_chain(prior, {1.0, 0.9, 0.1}, 1).fidelity;
  const double without = retrodict_chain(prior, {1.0, 0.9, 0.0}, 1).fidelity;
  REQUIRE(with_dark >= without);
  REQUIRE_THAT(without, Catch::Matchers::WithinAbs(0.81, 1e-9));
  REQUIRE_THAT(with_dark, Catch::Matchers::WithinAbs(0.81089108910891, 1e-9));
}

TEST_CASE("relative count probability", "[retrodict]") {
  const auto prior = flat_prior(800);
  SECTION("perfect chain is the reference itself") {
    REQUIRE_THAT(relative_count_probability(prior, {1.0, 1.0, 0.0}, 0),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("eta=0.8, G=10 costs a factor 8") {
    REQUIRE_THAT(relative_count_probability(prior, {10.0, 0.8, 0.0}, 0),
                 Catch::Matchers::WithinAbs(0.125, 1e-6));
  }
  SECTION("converged flat prior cost is 1/(eta G)") {
    for (double eta : {0.4, 0.7, 0.9}) {
      for (double gain : {2.0, 8.0}) {
        REQUIRE_THAT(relative_count_probability(prior, {gain, eta, 0.0}, 0),
                     Catch::Matchers::WithinRel(1.0 / (eta * gain), 1e-6));
      }
    }
  }
  SECTION("zero reference is a typed error") {
    const auto vacuum_only = prior_from_values({1.0});
    REQUIRE_THROWS_AS(
        relative_count_probability(vacuum_only, {4.0, 0.5, 0.0}, 2),
        zero_reference_error);
  }
}

TEST_CASE("fidelity surface", "[retrodict]") {
  SECTION("singleton grid with a perfect detector") {
    const std::vector<double> one{1.0};
    const auto result = fidelity_surface(flat_prior(10), 0, one, one);
    REQUIRE(result.rows.size() == 1);
    REQUIRE_THAT(std::get<double>(result.rows[0][2]),
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  SECTION("rows come out eta-major") {
    const std::vector<double> etas{0.4, 0.8};
    const std::vector<double> gains{1.0, 2.0, 3.0};
    const auto result = fidelity_surface(flat_prior(100), 0, etas, gains);
    REQUIRE(result.rows.size() == 6);
    std::size_t idx = 0;
    for (double eta : etas) {
      for (double gain : gains) {
        REQUIRE(std::get<double>(result.rows[idx][0]) == eta);
        REQUIRE(std::get<double>(result.rows[idx][1]) == gain);
        ++idx;
      }
    }
  }

  SECTION("result does not depend on the thread count") {
    const std::vector<double> etas{0.3, 0.6, 0.9};
    const std::vector<double> gains{1.0, 4.0, 16.0};
    const auto serial =
        fidelity_surface(flat_prior(200), 0, etas, gains, 1e-12, 0.0, {}, 1);
    const auto parallel =
        fidelity_surface(flat_prior(200), 0, etas, gains, 1e-12, 0.0, {}, 4);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
      REQUIRE(std::get<double>(serial.rows[i][2]) ==
              std::get<double>(parallel.rows[i][2]));
    }
  }

  SECTION("per-cell failures land in the status column") {
    const std::vector<double> etas{0.5};
    const std::vector<double> gains{1.0, 16.0};
    // a 24-level q-cap starves the G=16 series, not the G=1 one
    const auto result = fidelity_surface(flat_prior(20), 0, etas, gains, 1e-12,
                                         0.0, KernelLimits{24, 24});
    REQUIRE(std::get<std::string>(result.rows[0][5]) == "ok");
    REQUIRE(std::get<std::string>(result.rows[1][5]).rfind("error", 0) == 0);
    REQUIRE(std::holds_alternative<std::monostate>(result.rows[1][2]));
  }

  SECTION("empty grids are rejected") {
    REQUIRE_THROWS_AS(fidelity_surface(flat_prior(10), 0, {},
                                       std::vector<double>{1.0}),
                      std::invalid_argument);
  }
}

TEST_CASE("kernel-based and row-based retrodiction agree", "[retrodict]") {
  const auto prior = prior_from_values({0.4, 0.3, 0.2, 0.1});
  const DetectionChainParams params{6.0, 0.7, 0.0};
  const auto kernel = compound_kernel(params, 4, 64, 1e-11,
                                      ColumnPolicy::truncated_block);
  for (std::size_t n : {0ul, 1ul, 5ul}) {
    const auto via_kernel = retrodict(prior, kernel, n);
    const auto via_row = retrodict_chain(prior, params, n);
    REQUIRE_THAT(via_kernel.fidelity,
                 Catch::Matchers::WithinRel(via_row.fidelity, 1e-12));
    REQUIRE_THAT(via_kernel.count_probability,
                 Catch::Matchers::WithinRel(via_row.count_probability, 1e-12));
  }
}
