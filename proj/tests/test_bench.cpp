#include <doctest.h>

#include <sstream>

#include "scf/bench.hpp"
#include "scf/error.hpp"

using namespace scf;

TEST_CASE("pair count audit") {
  CHECK(pair_count_audit(std::vector<Label>{0, 0, 0, 0}) == PairCounts{12, 3, 6});
  std::vector<Label> half(128, 0);
  std::fill(half.begin() + 64, half.end(), 1);
  const auto c = pair_count_audit(half);
  CHECK(c.supcl_terms == 8064);
  CHECK(c.stegcl_terms == 126);
  CHECK(c.supcl_terms / c.stegcl_terms == 64);
  CHECK(pair_count_audit(std::vector<Label>{}) == PairCounts{});
  CHECK(pair_count_audit(std::vector<Label>{3, 1, 1}) == PairCounts{2, 1, 1});
}

TEST_CASE("time_loss") {
  Rng rng(1);
  const auto steg = time_loss(ContrastiveVariant::stegcl, 256, 16, 5, rng);
  CHECK(steg.term_count == 254);
  const auto sup = time_loss(ContrastiveVariant::supcl, 256, 16, 5, rng);
  CHECK(sup.term_count == 32512);
  const auto self = time_loss(ContrastiveVariant::selfcl, 64, 8, 5, rng);
  CHECK(self.term_count == 64);
  for (const auto& r : {steg, sup, self}) {
    CHECK(r.p10_ns <= r.median_ns);
    CHECK(r.median_ns <= r.p90_ns);
    CHECK(r.repeats == 5);
  }
  CHECK_THROWS_AS(time_loss(ContrastiveVariant::stegcl, 256, 16, 4, rng), InvalidArgument);
  CHECK_THROWS_AS(time_loss(ContrastiveVariant::none, 256, 16, 5, rng), InvalidArgument);
  CHECK_THROWS_AS(time_loss(ContrastiveVariant::stegcl, 7, 16, 5, rng), InvalidArgument);

  std::ostringstream out;
  write_bench_header(out);
  write_bench_row(out, steg);
  const std::string text = out.str();
  CHECK(text.rfind("variant,batch,dim,repeats,median_ns,p10_ns,p90_ns,terms\nstegcl,256,16,5,", 0) == 0);
  CHECK(text.size() > 0);
  CHECK(text.back() == '\n');
  CHECK(text.substr(text.size() - 5) == ",254\n");
}
