#include "halrm/scraper/rate.hpp"

#include <stdexcept>
#include <thread>

namespace halrm::scraper {

Instant to_instant(Timestamp t) { return std::chrono::time_point_cast<Millis>(t); }

Timestamp to_timestamp(Instant t) { return std::chrono::floor<std::chrono::seconds>(t); }

Instant SystemClock::now() const {
  return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(Instant t) { std::this_thread::sleep_until(t); }

Instant ManualClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::sleep_until(Instant t) {
  std::lock_guard lock(mu_);
  if (t > now_) now_ = t;
}

void ManualClock::advance(Millis d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

RateBudget::RateBudget(std::size_t capacity, Millis window) : capacity_(capacity), window_(window) {
  if (capacity == 0 || window <= Millis::zero()) throw std::invalid_argument("rate budget needs capacity and window");
}

std::size_t RateBudget::spent(Instant now) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (auto t : log_)
    if (now - t < window_ && t <= now) ++n;
  return n;
}

Instant RateBudget::next_locked(Instant now) const {
  if (log_.size() < capacity_) return now;
  Instant free_at = log_[log_.size() - capacity_] + window_;
  return free_at > now ? free_at : now;
}

Instant RateBudget::next_available(Instant now) const {
  std::lock_guard lock(mu_);
  return next_locked(now);
}

bool RateBudget::try_acquire(Instant now) {
  std::lock_guard lock(mu_);
  if (!log_.empty() && now < log_.back()) now = log_.back();
  if (next_locked(now) > now) return false;
  log_.push_back(now);
  while (log_.size() > capacity_) log_.pop_front();
  return true;
}

Instant RateBudget::acquire(Clock& clock) {
  for (;;) {
    Instant now = clock.now();
    if (try_acquire(now)) return now;
    clock.sleep_until(next_available(now));
  }
}

void RateBudget::exhaust(Instant now) {
  std::lock_guard lock(mu_);
  log_.assign(capacity_, now);
}

RateBudget nvd_budget(bool with_key) { return RateBudget(with_key ? 50 : 5, std::chrono::seconds(30)); }

RateBudget otx_budget() { return RateBudget(10000, std::chrono::seconds(3600)); }

}  // namespace halrm::scraper
