#include <doctest.h>

#include <set>

#include "vabal/error.hpp"
#include "vabal/pool.hpp"

using vabal::Dataset;
using vabal::Pool;

namespace {

Dataset tiny_dataset(std::size_t n) {
  Dataset ds;
  ds.input_dim = 1;
  ds.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    ds.features.push_back(static_cast<double>(i));
    ds.labels.push_back(static_cast<int>(i % 2));
    ds.train_ids.push_back(i);
  }
  return ds;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("transfer of the empty set only advances the round") {
  const Dataset ds = tiny_dataset(10);
  const Pool p = Pool::all_unlabelled(ds);
  const Pool q = transfer(p, {});
  CHECK(q.labelled == p.labelled);
  CHECK(q.unlabelled == p.unlabelled);
  CHECK(q.round == p.round + 1);
}

TEST_CASE("transfer moves the right number of ids") {
  const Dataset ds = tiny_dataset(100);
  vabal::RngStream rng(1, "pool");
  Pool p = Pool::initial(ds, 10, rng);
  CHECK(p.labelled.size() == 10);
  CHECK(p.unlabelled.size() == 90);
  const Pool q = transfer(p, {p.unlabelled[0], p.unlabelled[3], p.unlabelled[7],
                              p.unlabelled[11], p.unlabelled[42]});
  CHECK(q.labelled.size() == 15);
  CHECK(q.unlabelled.size() == 85);
  CHECK(q.round == p.round + 1);
}

TEST_CASE("transfer errors name the offending id") {
  const Dataset ds = tiny_dataset(10);
  vabal::RngStream rng(2, "pool");
  Pool p = Pool::initial(ds, 3, rng);
  const std::size_t labelled_id = p.labelled[0];
  CHECK_THROWS_WITH_AS(transfer(p, {labelled_id}),
                       doctest::Contains(std::to_string(labelled_id)), vabal::ContractError);
  CHECK_THROWS_AS(transfer(p, {9999}), vabal::ContractError);
  const std::size_t u = p.unlabelled[0];
  CHECK_THROWS_AS(transfer(p, {u, u}), vabal::ContractError);
}

TEST_CASE("successive disjoint transfers commute in final membership") {
  const Dataset ds = tiny_dataset(50);
  const Pool p = Pool::all_unlabelled(ds);
  const std::vector<std::size_t> a = {1, 5, 9};
  const std::vector<std::size_t> b = {2, 6, 10};
  const Pool ab = transfer(transfer(p, a), b);
  const Pool ba = transfer(transfer(p, b), a);
  const std::set<std::size_t> sab(ab.labelled.begin(), ab.labelled.end());
  const std::set<std::size_t> sba(ba.labelled.begin(), ba.labelled.end());
  CHECK(sab == sba);  // set-algebra oracle: (L u A) u B == (L u B) u A
  const std::set<std::size_t> uab(ab.unlabelled.begin(), ab.unlabelled.end());
  const std::set<std::size_t> uba(ba.unlabelled.begin(), ba.unlabelled.end());
  CHECK(uab == uba);
}

TEST_CASE("partition invariant holds across random operation sequences") {
  const Dataset ds = tiny_dataset(60);
  vabal::RngStream rng(3, "pool-prop");
  for (int trial = 0; trial < 50; ++trial) {
    vabal::RngStream t = rng.substream("trial", trial);
    Pool p = Pool::initial(ds, 1 + t.uniform_below(10), t);
    for (int step = 0; step < 6 && !p.unlabelled.empty(); ++step) {
      // pick a random subset of the unlabelled pool
      std::vector<std::size_t> pick;
      for (std::size_t id : p.unlabelled)
        if (t.uniform() < 0.2) pick.push_back(id);
      const std::size_t labelled_before = p.labelled.size();
      p = transfer(p, pick);
      CHECK(p.is_partition_of(ds.train_ids));
      CHECK(p.labelled.size() == labelled_before + pick.size());
    }
  }
}

TEST_CASE("initial pool draws uniformly and is deterministic per seed") {
  const Dataset ds = tiny_dataset(40);
  vabal::RngStream a(9, "pool-init");
  vabal::RngStream b(9, "pool-init");
  const Pool pa = Pool::initial(ds, 10, a);
  const Pool pb = Pool::initial(ds, 10, b);
  CHECK(pa.labelled == pb.labelled);
  CHECK(pa.is_partition_of(ds.train_ids));
}

}  // TEST_SUITE
