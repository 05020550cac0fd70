#include "vabal/pool.hpp"

#include <algorithm>
#include <set>

#include "vabal/error.hpp"

namespace vabal {

Pool Pool::all_unlabelled(const Dataset& dataset) {
  Pool p;
  p.unlabelled = dataset.train_ids;
  return p;
}

Pool Pool::initial(const Dataset& dataset, std::size_t n, RngStream& rng) {
  Pool p = all_unlabelled(dataset);
  n = std::min(n, p.unlabelled.size());
  std::vector<std::size_t> ids = p.unlabelled;
  // partial Fisher-Yates: the first n entries are a uniform sample
  for (std::size_t i = 0; i < n; ++i)
    std::swap(ids[i], ids[i + rng.uniform_below(ids.size() - i)]);
  ids.resize(n);
  return transfer(p, ids);
}

bool Pool::is_partition_of(const std::vector<std::size_t>& train_ids) const {
  std::set<std::size_t> l(labelled.begin(), labelled.end());
  std::set<std::size_t> u(unlabelled.begin(), unlabelled.end());
  if (l.size() != labelled.size() || u.size() != unlabelled.size()) return false;
  for (std::size_t id : l)
    if (u.count(id)) return false;
  std::set<std::size_t> all(train_ids.begin(), train_ids.end());
  if (l.size() + u.size() != all.size()) return false;
  for (std::size_t id : l)
    if (!all.count(id)) return false;
  for (std::size_t id : u)
    if (!all.count(id)) return false;
  return true;
}

Pool transfer(const Pool& pool, const std::vector<std::size_t>& selected_ids) {
  std::set<std::size_t> labelled(pool.labelled.begin(), pool.labelled.end());
  std::set<std::size_t> unlabelled(pool.unlabelled.begin(), pool.unlabelled.end());
  std::set<std::size_t> seen;
  for (std::size_t id : selected_ids) {
    if (labelled.count(id))
      throw ContractError("transfer: id " + std::to_string(id) + " is already labelled");
    if (!unlabelled.count(id))
      throw ContractError("transfer: id " + std::to_string(id) + " is not in the unlabelled pool");
    if (!seen.insert(id).second)
      throw ContractError("transfer: duplicate id " + std::to_string(id) + " in selection");
  }
  Pool out;
  out.labelled = pool.labelled;
  out.labelled.insert(out.labelled.end(), selected_ids.begin(), selected_ids.end());
  out.unlabelled.reserve(pool.unlabelled.size() - selected_ids.size());
  for (std::size_t id : pool.unlabelled)
    if (!seen.count(id)) out.unlabelled.push_back(id);
  out.round = pool.round + 1;
  return out;
}

}  // namespace vabal
