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

#pragma once

// Kahn-style process network: sequential processes written as coroutines that
// talk only through bounded FIFOs. Reads block while a FIFO is empty, writes
// block while it is full. Because every FIFO has exactly one producer and one
// consumer, the data each process sees does not depend on the interleaving,
// so both schedulers below produce identical results.

#include <condition_variable>
#include <coroutine>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "synetgy/errors.hpp"

namespace synetgy::accel {

enum class SchedulerKind { single_thread, concurrent };

const char* to_string(SchedulerKind k);
SchedulerKind scheduler_from_string(const std::string& s);

class DeadlockError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ProcessNetwork;

class ChannelBase {
 public:
  ChannelBase(ProcessNetwork& net, std::string name, std::size_t capacity)
      : net_(net), name_(std::move(name)), capacity_(capacity) {}
  virtual ~ChannelBase() = default;
  ChannelBase(const ChannelBase&) = delete;
  ChannelBase& operator=(const ChannelBase&) = delete;

  const std::string& name() const { return name_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t high_water() const { return high_water_; }
  std::uint64_t transfers() const { return transfers_; }

  // Caller holds the network lock when running concurrently.
  virtual std::size_t size_unlocked() const = 0;
  bool readable_unlocked() const { return size_unlocked() > 0; }
  bool writable_unlocked() const { return size_unlocked() < capacity_; }

 protected:
  ProcessNetwork& net_;
  std::string name_;
  std::size_t capacity_;
  std::size_t high_water_ = 0;
  std::uint64_t transfers_ = 0;
};

// What a suspended process is waiting for.
struct WaitState {
  const ChannelBase* channel = nullptr;
  bool for_read = false;

  bool satisfied_unlocked() const {
    if (channel == nullptr) return true;
    return for_read ? channel->readable_unlocked() : channel->writable_unlocked();
  }
};

class Process {
 public:
  struct promise_type {
    WaitState wait;
    std::exception_ptr error;

    Process get_return_object() {
      return Process(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
  };
  using Handle = std::coroutine_handle<promise_type>;

  Process() = default;
  explicit Process(Handle h) : h_(h) {}
  Process(Process&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Process& operator=(Process&& o) noexcept {
    if (this != &o) {
      reset();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  ~Process() { reset(); }

  bool done() const { return !h_ || h_.done(); }
  bool runnable_unlocked() const { return !done() && h_.promise().wait.satisfied_unlocked(); }
  const WaitState& wait() const { return h_.promise().wait; }
  std::exception_ptr error() const { return h_ ? h_.promise().error : nullptr; }
  void resume() {
    h_.promise().wait = {};
    h_.resume();
  }

 private:
  void reset() {
    if (h_) h_.destroy();
    h_ = {};
  }
  Handle h_;
};

template <class T>
class Fifo;

class ProcessNetwork {
 public:
  ProcessNetwork() = default;
  ProcessNetwork(const ProcessNetwork&) = delete;
  ProcessNetwork& operator=(const ProcessNetwork&) = delete;

  template <class T>
  Fifo<T>& make_fifo(std::string name, std::size_t capacity) {
    if (capacity == 0) throw ConfigError("fifo " + name + " needs a positive capacity");
    auto f = std::make_unique<Fifo<T>>(*this, std::move(name), capacity);
    auto& ref = *f;
    channels_.push_back(std::move(f));
    return ref;
  }

  void spawn(std::string name, Process p);

  // Runs every process to completion. Throws DeadlockError if all remaining
  // processes are blocked, or rethrows the first exception a process raised.
  void run(SchedulerKind kind);

  const std::vector<std::unique_ptr<ChannelBase>>& channels() const { return channels_; }

 private:
  template <class T>
  friend class Fifo;

  struct Entry {
    std::string name;
    Process process;
  };

  void run_round_robin();
  void run_threads();
  [[noreturn]] void report_deadlock() const;
  bool stalled_unlocked() const;
  void rethrow_process_errors() const;

  // Channel state is guarded by mu_ only while threads run.
  template <class F>
  auto guarded(F&& f) {
    if (!threaded_) return f();
    std::lock_guard lk(mu_);
    auto r = f();
    cv_.notify_all();
    return r;
  }

  std::vector<std::unique_ptr<ChannelBase>> channels_;
  std::vector<Entry> procs_;
  bool threaded_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t live_ = 0;
  std::size_t blocked_ = 0;
  std::vector<char> parked_;  // per process, under mu_
  bool deadlock_ = false;
};

template <class T>
class Fifo : public ChannelBase {
 public:
  using ChannelBase::ChannelBase;

  std::size_t size_unlocked() const override { return q_.size(); }

  struct ReadAwaiter {
    Fifo& f;
    bool await_ready() { return f.net_.guarded([&] { return !f.q_.empty(); }); }
    void await_suspend(Process::Handle h) { h.promise().wait = {&f, true}; }
    T await_resume() {
      return f.net_.guarded([&] {
        T v = std::move(f.q_.front());
        f.q_.pop_front();
        return v;
      });
    }
  };

  struct WriteAwaiter {
    Fifo& f;
    T value;
    bool await_ready() { return f.net_.guarded([&] { return f.q_.size() < f.capacity_; }); }
    void await_suspend(Process::Handle h) { h.promise().wait = {&f, false}; }
    void await_resume() {
      f.net_.guarded([&] {
        f.q_.push_back(std::move(value));
        ++f.transfers_;
        if (f.q_.size() > f.high_water_) f.high_water_ = f.q_.size();
        return 0;
      });
    }
  };

  ReadAwaiter read() { return {*this}; }
  WriteAwaiter write(T v) { return {*this, std::move(v)}; }

 private:
  std::deque<T> q_;
};

}  // namespace synetgy::accel
