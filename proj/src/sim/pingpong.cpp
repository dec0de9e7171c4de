#include "evlog/sim/pingpong.hpp"

#include <string>

namespace evlog::sim {

PingPongBuffer::PingPongBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("ping-pong buffer capacity must be > 0");
}

std::optional<DmaRequest> PingPongBuffer::push() {
  if (busy_[active_]) {
    throw SimFault("buffer overrun: both buffers unavailable at sample index " +
                   std::to_string(total_pushed_));
  }
  ++fill_;
  ++total_pushed_;
  if (fill_ < capacity_) return std::nullopt;
  DmaRequest req{active_, total_pushed_ - capacity_, total_pushed_};
  busy_[active_] = true;
  active_ ^= 1;
  fill_ = 0;
  return req;
}

void PingPongBuffer::complete(int buffer) { busy_[buffer] = false; }

}  // namespace evlog::sim
