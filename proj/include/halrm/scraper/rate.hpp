#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <mutex>

#include "halrm/core/time.hpp"

namespace halrm::scraper {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

Instant to_instant(Timestamp t);
Timestamp to_timestamp(Instant t);  // truncates to seconds

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() const = 0;
  virtual void sleep_until(Instant t) = 0;
  void sleep_for(Millis d) { sleep_until(now() + d); }
};

class SystemClock : public Clock {
 public:
  Instant now() const override;
  void sleep_until(Instant t) override;
};

// Time moves only when told to; sleeping jumps straight to the deadline.
class ManualClock : public Clock {
 public:
  explicit ManualClock(Instant start) : now_(start) {}
  explicit ManualClock(Timestamp start) : now_(to_instant(start)) {}

  Instant now() const override;
  void sleep_until(Instant t) override;
  void advance(Millis d);

 private:
  mutable std::mutex mu_;
  Instant now_;
};

// At most `capacity` requests in any window of length `window`. Keeps the
// issue times of the last `capacity` requests.
class RateBudget {
 public:
  RateBudget(std::size_t capacity, Millis window);

  std::size_t capacity() const { return capacity_; }
  Millis window() const { return window_; }

  // Requests issued in (now - window, now].
  std::size_t spent(Instant now) const;

  // Earliest instant >= now at which a request may be issued.
  Instant next_available(Instant now) const;

  // Records a request at `now` if the budget allows it.
  bool try_acquire(Instant now);

  // Sleeps on the clock until a request is allowed, records it and returns
  // the issue instant.
  Instant acquire(Clock& clock);

  // Treats the window as spent from `now`, e.g. after the server answered 429.
  void exhaust(Instant now);

 private:
  Instant next_locked(Instant now) const;

  std::size_t capacity_;
  Millis window_;
  mutable std::mutex mu_;
  std::deque<Instant> log_;
};

inline constexpr std::size_t kNvdPageSize = 2000;

RateBudget nvd_budget(bool with_key);  // 50 / 30 s, or 5 / 30 s without a key
RateBudget otx_budget();               // 10,000 / 3600 s

}  // namespace halrm::scraper
