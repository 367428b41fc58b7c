#include "doctest.h"

#include <cmath>
#include <vector>

#include "nhmm/diagnostics.hpp"
#include "nhmm/random.hpp"

using namespace nhmm;

namespace {

ChainDraws iid(int chains, int n, std::uint64_t seed) {
  ChainDraws out(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(c)].push_back(standard_normal(rng));
  }
  return out;
}

ChainDraws ar1(int chains, int n, double phi, std::uint64_t seed) {
  ChainDraws out(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    double x = standard_normal(rng) / std::sqrt(1.0 - phi * phi);
    for (int i = 0; i < n; ++i) {
      x = phi * x + standard_normal(rng);
      out[static_cast<std::size_t>(c)].push_back(x);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("independent normal draws look converged") {
  const ChainDraws d = iid(4, 1000, 11);
  const double r = split_rhat(d);
  CHECK(r >= 0.99);
  CHECK(r <= 1.01);
  CHECK(ess_bulk(d) >= 0.8 * 4000);
  CHECK(ess_mean(d) >= 0.8 * 4000);
}

TEST_CASE("ESS of an AR(1) chain is near N (1 - phi) / (1 + phi)") {
  const double phi = 0.8;
  const ChainDraws d = ar1(4, 5000, phi, 3);
  const double expect = 20000.0 * (1.0 - phi) / (1.0 + phi);
  CHECK(ess_mean(d) == doctest::Approx(expect).epsilon(0.15));
  CHECK(ess_bulk(d) == doctest::Approx(expect).epsilon(0.15));
}

TEST_CASE("constant chains") {
  ChainDraws same(3, std::vector<double>(100, 2.0));
  CHECK(ess_bulk(same) >= 1.0);
  CHECK(ess_bulk(same) <= 2.0);
  ChainDraws differ{std::vector<double>(100, 1.0), std::vector<double>(100, 2.0)};
  CHECK(split_rhat(differ) > 10.0);
  CHECK(ess_bulk(differ) <= 4.0);
}

TEST_CASE("shifted chains are flagged") {
  ChainDraws d = iid(4, 500, 5);
  for (double& x : d[0]) x += 3.0;
  CHECK(split_rhat(d) > 1.1);
}

TEST_CASE("chain order does not matter") {
  ChainDraws d = ar1(4, 400, 0.5, 9);
  ChainDraws p{d[2], d[0], d[3], d[1]};
  CHECK(split_rhat(d) == doctest::Approx(split_rhat(p)).epsilon(1e-12));
  CHECK(ess_bulk(d) == doctest::Approx(ess_bulk(p)).epsilon(1e-12));
}

TEST_CASE("single chain: no R-hat, ESS still defined") {
  const ChainDraws d = iid(1, 400, 2);
  CHECK(std::isnan(split_rhat(d)));
  CHECK(ess_bulk(d) > 200.0);
}
