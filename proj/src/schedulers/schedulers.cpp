#include "marlsched/schedulers/schedulers.hpp"

#include <algorithm>
#include <cmath>

namespace marlsched::schedulers {

using simcore::Allocation;
using simcore::SchedulerView;

Allocation pf_allocate(const SchedulerView& view, const PfParams& params) {
  Allocation alloc;
  alloc.rbg_to_ue.assign(static_cast<std::size_t>(view.cfg.n_rbgs), -1);
  for (int k = 0; k < view.cfg.n_rbgs; ++k) {
    if (view.rbg_busy[static_cast<std::size_t>(k)]) continue;
    double best = -1.0;
    int best_ue = -1;
    for (std::size_t i = 0; i < view.ues.size(); ++i) {
      const auto& ue = view.ues[i];
      if (ue.buffer_bits <= 0) continue;
      const double rate = static_cast<double>(view.rate_bits(static_cast<int>(i), k));
      const double hist = std::max(ue.hist_rate, params.eps_hist);
      const double metric = std::pow(rate, params.alpha1) / std::pow(hist, params.alpha2);
      if (metric > best) {
        best = metric;
        best_ue = ue.id;
      }
    }
    alloc.rbg_to_ue[static_cast<std::size_t>(k)] = best_ue;
  }
  return alloc;
}

Allocation op_allocate(const SchedulerView& view) {
  Allocation alloc;
  alloc.rbg_to_ue.assign(static_cast<std::size_t>(view.cfg.n_rbgs), -1);
  for (int k = 0; k < view.cfg.n_rbgs; ++k) {
    if (view.rbg_busy[static_cast<std::size_t>(k)]) continue;
    std::int64_t best = -1;
    int best_ue = -1;
    for (std::size_t i = 0; i < view.ues.size(); ++i) {
      if (view.ues[i].buffer_bits <= 0) continue;
      const std::int64_t rate = view.rate_bits(static_cast<int>(i), k);
      if (rate > best) {
        best = rate;
        best_ue = view.ues[i].id;
      }
    }
    alloc.rbg_to_ue[static_cast<std::size_t>(k)] = best_ue;
  }
  return alloc;
}

void RrfQueue::sync(const simcore::SchedulerView& view) {
  std::vector<int> next;
  next.reserve(view.ues.size());
  for (int id : order) {
    const bool present = std::any_of(view.ues.begin(), view.ues.end(),
                                     [id](const auto& ue) { return ue.id == id; });
    if (present) next.push_back(id);
  }
  for (const auto& ue : view.ues) {
    if (std::find(next.begin(), next.end(), ue.id) == next.end()) next.push_back(ue.id);
  }
  order = std::move(next);
}

Allocation rrf_allocate(const SchedulerView& view, RrfQueue& queue) {
  queue.sync(view);
  Allocation alloc;
  alloc.rbg_to_ue.assign(static_cast<std::size_t>(view.cfg.n_rbgs), -1);

  const bool any_free = std::any_of(view.rbg_busy.begin(), view.rbg_busy.end(),
                                    [](std::uint8_t b) { return b == 0; });
  if (!any_free) return alloc;

  auto has_data = [&view](int id) {
    for (const auto& ue : view.ues)
      if (ue.id == id) return ue.buffer_bits > 0;
    return false;
  };

  for (std::size_t i = 0; i < queue.order.size(); ++i) {
    const int id = queue.order[i];
    if (!has_data(id)) continue;
    for (int k = 0; k < view.cfg.n_rbgs; ++k)
      if (!view.rbg_busy[static_cast<std::size_t>(k)])
        alloc.rbg_to_ue[static_cast<std::size_t>(k)] = id;
    // Skipped users rotate to the tail first, the served one joins last.
    std::vector<int> next(queue.order.begin() + static_cast<std::ptrdiff_t>(i) + 1, queue.order.end());
    next.insert(next.end(), queue.order.begin(), queue.order.begin() + static_cast<std::ptrdiff_t>(i));
    next.push_back(id);
    queue.order = std::move(next);
    break;
  }
  return alloc;
}

}  // namespace marlsched::schedulers
