#include "doctest.h"

#include <cmath>
#include <vector>

#include "nhmm/posterior.hpp"
#include "nhmm/prior.hpp"
#include "test_support.hpp"

using namespace nhmm;
using namespace nhmm::test;

namespace {

struct Fixture {
  HolidayCalendar cal = tiny_calendar(45, {3, 4, 18, 30});
  ModelData data = tiny_data(cal, 45, 77);
  Hyperparameters hyper = default_hyperparameters(PriorPreset::Weak, 2, 2);
};

}  // namespace

TEST_CASE("gradient matches central differences at random interior points") {
  Fixture fx;
  for (ModelMode mode : {ModelMode::FourState, ModelMode::TwoState}) {
    PosteriorModel model(fx.data, fx.hyper, mode);
    Rng rng = make_rng(404);
    for (int rep = 0; rep < 20; ++rep) {
      ModelParams p = moderate_params(500 + static_cast<std::uint64_t>(rep));
      // Put the latents somewhere generic too.
      std::vector<double> u = unconstrain(p);
      for (std::size_t i = 0; i < u.size(); ++i)
        if (model.layout().tags[i].block == Block::Latent) u[i] = 0.5 * standard_normal(rng);
      std::vector<double> g;
      const double f0 = model.log_density(u, g);
      REQUIRE(std::isfinite(f0));
      CHECK(model.log_density(u) == f0);
      int bad = 0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::fabs(u[i]));
        auto up = u, dn = u;
        up[i] += h;
        dn[i] -= h;
        const double fd = (model.log_density(up) - model.log_density(dn)) / (2.0 * h);
        const double scale = std::max(1.0, std::fabs(fd));
        if (std::fabs(fd - g[i]) > 1e-5 * scale) {
          ++bad;
          MESSAGE(model.layout().names[i] << " analytic " << g[i] << " fd " << fd);
        }
      }
      CHECK(bad == 0);
    }
  }
}

TEST_CASE("log density is likelihood plus prior plus Jacobian") {
  Fixture fx;
  PosteriorModel model(fx.data, fx.hyper);
  const ModelParams p = moderate_params(9);
  const std::vector<double> u = unconstrain(p);
  double lj = 0.0;
  const ModelParams back = constrain(u, 2, 2, &lj);
  const double expect = forward_filter(fx.data, back).log_likelihood + log_prior(back, fx.hyper) + lj;
  CHECK(model.log_density(u) == doctest::Approx(expect).epsilon(1e-14));
  std::vector<double> bad = u;
  bad[0] = std::nan("");
  CHECK(model.log_density(bad) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("nu_23_1 only acts on days that follow a holiday") {
  // Covariates with no holiday inside the window: the post-holiday transition row is
  // reachable only from states that cannot occur, so the likelihood ignores nu_23_1.
  const HolidayCalendar none = tiny_calendar(30, {});
  const ModelData quiet = tiny_data(none, 30, 4);
  ModelParams p = moderate_params(4);
  const double a = forward_filter(quiet, p).log_likelihood;
  p.transition.nu23_1 += 1.0;
  CHECK(forward_filter(quiet, p).log_likelihood == a);

  Fixture fx;
  ModelParams q = moderate_params(4);
  const double b = forward_filter(fx.data, q).log_likelihood;
  q.transition.nu23_1 += 1.0;
  CHECK(forward_filter(fx.data, q).log_likelihood != b);
}

TEST_CASE("xi that rounds to a unit root gives zero density instead of throwing") {
  Fixture fx;
  PosteriorModel model(fx.data, fx.hyper);
  std::vector<double> u = unconstrain(moderate_params(9));
  const auto& names = model.layout().names;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (names[i].rfind("xi", 0) != 0) continue;
    for (double edge : {-45.0, 45.0}) {
      auto w = u;
      w[i] = edge;
      std::vector<double> g;
      CHECK(model.log_density(w) == -std::numeric_limits<double>::infinity());
      CHECK(model.log_density(w, g) == -std::numeric_limits<double>::infinity());
    }
  }
}
