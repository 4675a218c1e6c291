// Copyright 2026 The Chartforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pipeline/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "pipeline/log.hpp"

namespace chartforge::pipeline {

bool DispatchBudget::take() {
  if (unlimited_) return true;
  long long cur = remaining_.load();
  while (cur > 0) {
    if (remaining_.compare_exchange_weak(cur, cur - 1)) return true;
  }
  exhausted_ = true;
  return false;
}

std::int64_t derive_seed(std::int64_t run_seed, std::string_view label) {
  const std::string digest = sha256_hex(std::to_string(run_seed) + ":" + std::string(label));
  return static_cast<std::int64_t>(std::stoull(digest.substr(0, 12), nullptr, 16));
}

namespace {

bool item_level(ErrorCode code) {
  switch (code) {
    case ErrorCode::kTransport:
    case ErrorCode::kProtocol:
    case ErrorCode::kScriptedGap:
    case ErrorCode::kRenderFailure:
    case ErrorCode::kSynthesisParse:
    case ErrorCode::kUnavailable:
      return true;
    default:
      return false;
  }
}

}  // namespace

StageResult run_stage(RunContext& ctx, const std::string& stage, const std::vector<WorkItem>& items,
                      const ItemFn& fn, int parallelism) {
  StageResult result;
  const std::size_t n = items.size();
  std::vector<std::set<std::string>> done(n);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& id : items[i].record_ids) {
      if (ctx.ledger->terminal(stage, id)) done[i].insert(id);
    }
    if (done[i].size() < items[i].record_ids.size()) {
      pending.push_back(i);
    } else {
      ++result.counts.reused;
    }
  }

  std::vector<std::optional<std::vector<Outcome>>> slots(pending.size());
  std::mutex commit_mutex;
  std::size_t next_commit = 0;
  std::size_t next_item = 0;
  std::atomic<bool> stop{false};
  std::exception_ptr abort_error;
  std::size_t dispatched_count = 0;

  auto commit_ready = [&] {
    // Caller holds commit_mutex.
    while (next_commit < pending.size() && slots[next_commit]) {
      std::vector<LedgerEvent> events;
      for (auto& o : *slots[next_commit]) {
        events.push_back({stage, o.record_id, o.action, o.cause, 0, std::move(o.record), std::move(o.detail)});
      }
      ctx.ledger->append_all(std::move(events));
      slots[next_commit].reset();
      ++next_commit;
    }
  };

  std::mutex dispatch_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        // Dispatch under a lock so the started items always form a prefix.
        std::lock_guard lock(dispatch_mutex);
        if (stop || next_item >= pending.size()) return;
        if (!ctx.budget->take()) {
          stop = true;
          return;
        }
        k = next_item++;
        ++dispatched_count;
      }
      const std::size_t index = pending[k];
      std::vector<Outcome> outcomes;
      try {
        outcomes = fn(index, done[index]);
      } catch (const Error& e) {
        if (!item_level(e.code())) {
          std::lock_guard lock(commit_mutex);
          if (!abort_error) abort_error = std::current_exception();
          stop = true;
          return;
        }
        for (const auto& id : items[index].record_ids) {
          if (!done[index].count(id)) {
            outcomes.push_back({id, Action::kFailed, std::string(error_code_name(e.code())) + ": " + e.what(), {}, {}});
          }
        }
      } catch (...) {
        std::lock_guard lock(commit_mutex);
        if (!abort_error) abort_error = std::current_exception();
        stop = true;
        return;
      }
      std::lock_guard lock(commit_mutex);
      slots[k] = std::move(outcomes);
      try {
        commit_ready();
      } catch (...) {
        if (!abort_error) abort_error = std::current_exception();
        stop = true;
        return;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(pending.size())));
  if (!pending.empty()) {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (abort_error) std::rethrow_exception(abort_error);
  result.counts.executed = dispatched_count;
  result.interrupted = dispatched_count < pending.size();

  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& id : items[i].record_ids) {
      auto ev = ctx.ledger->terminal(stage, id);
      if (!ev) {
        ++result.counts.failed;
        continue;
      }
      switch (ev->action) {
        case Action::kRetained:
          ++result.counts.retained;
          result.records.push_back(ev->record);
          break;
        case Action::kEmitted:
          ++result.counts.emitted;
          result.records.push_back(ev->record);
          break;
        case Action::kDropped:
          ++result.counts.dropped;
          break;
        case Action::kFailed:
          break;
      }
    }
  }
  log_info(stage + ": " + std::to_string(result.counts.retained) + " retained, " +
           std::to_string(result.counts.dropped) + " dropped, " + std::to_string(result.counts.emitted) +
           " emitted, " + std::to_string(result.counts.failed) + " unresolved, " +
           std::to_string(result.counts.reused) + " items reused" + (result.interrupted ? " (interrupted)" : ""));
  return result;
}

}  // namespace chartforge::pipeline
