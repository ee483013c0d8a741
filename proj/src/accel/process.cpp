// Copyright (c) 2026 The Synetgy-Sim Authors. All Rights Reserved.
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

#include "synetgy/accel/process.hpp"

#include <sstream>
#include <thread>

namespace synetgy::accel {

const char* to_string(SchedulerKind k) {
  return k == SchedulerKind::single_thread ? "single-thread" : "concurrent";
}

SchedulerKind scheduler_from_string(const std::string& s) {
  if (s == "single-thread" || s == "single") return SchedulerKind::single_thread;
  if (s == "concurrent") return SchedulerKind::concurrent;
  throw ConfigError("unknown scheduler '" + s + "' (expected single-thread or concurrent)");
}

void ProcessNetwork::spawn(std::string name, Process p) {
  procs_.push_back({std::move(name), std::move(p)});
}

void ProcessNetwork::run(SchedulerKind kind) {
  if (kind == SchedulerKind::single_thread) {
    run_round_robin();
  } else {
    run_threads();
  }
  rethrow_process_errors();
}

void ProcessNetwork::rethrow_process_errors() const {
  for (const auto& e : procs_) {
    if (auto err = e.process.error()) std::rethrow_exception(err);
  }
}

void ProcessNetwork::report_deadlock() const {
  std::ostringstream msg;
  msg << "process network deadlock:";
  for (const auto& e : procs_) {
    if (e.process.done()) continue;
    const auto& w = e.process.wait();
    msg << " [" << e.name << " waits to " << (w.for_read ? "read " : "write ")
        << (w.channel ? w.channel->name() : "?") << "]";
  }
  throw DeadlockError(msg.str());
}

// Reference scheduler: visit processes in spawn order and resume each one
// that can make progress until it blocks again.
void ProcessNetwork::run_round_robin() {
  threaded_ = false;
  for (;;) {
    bool all_done = true;
    bool progressed = false;
    for (auto& e : procs_) {
      if (e.process.done()) continue;
      all_done = false;
      if (!e.process.runnable_unlocked()) continue;
      e.process.resume();
      progressed = true;
      if (e.process.error()) return;
    }
    if (all_done) return;
    if (!progressed) report_deadlock();
  }
}

// Every live process is parked and none of them can continue. A parked
// process whose channel was just serviced has not woken yet but is runnable.
bool ProcessNetwork::stalled_unlocked() const {
  if (live_ == 0 || blocked_ != live_) return false;
  for (std::size_t i = 0; i < procs_.size(); ++i) {
    if (parked_[i] && procs_[i].process.runnable_unlocked()) return false;
  }
  return true;
}

// One OS thread per process.
void ProcessNetwork::run_threads() {
  threaded_ = true;
  live_ = procs_.size();
  blocked_ = 0;
  deadlock_ = false;
  parked_.assign(procs_.size(), 0);

  auto body = [this](std::size_t i) {
    Process& p = procs_[i].process;
    for (;;) {
      {
        std::unique_lock lk(mu_);
        if (!p.runnable_unlocked()) {
          ++blocked_;
          parked_[i] = 1;
          if (stalled_unlocked()) {
            deadlock_ = true;
            cv_.notify_all();
          }
          cv_.wait(lk, [&] { return deadlock_ || p.runnable_unlocked(); });
          --blocked_;
          parked_[i] = 0;
          if (!p.runnable_unlocked()) break;  // deadlock declared
        }
      }
      p.resume();
      if (p.done()) break;
    }
    std::lock_guard lk(mu_);
    --live_;
    if (stalled_unlocked()) deadlock_ = true;
    // A failed process leaves its peers blocked forever; wake them.
    if (p.error()) deadlock_ = true;
    cv_.notify_all();
  };

  std::vector<std::thread> threads;
  threads.reserve(procs_.size());
  for (std::size_t i = 0; i < procs_.size(); ++i) threads.emplace_back(body, i);
  for (auto& t : threads) t.join();
  threaded_ = false;

  bool unfinished = false;
  for (const auto& e : procs_) unfinished |= !e.process.done();
  if (unfinished) {
    rethrow_process_errors();
    report_deadlock();
  }
}

}  // namespace synetgy::accel
