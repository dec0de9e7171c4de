#pragma once

#include <cstdint>
#include <optional>

#include "evlog/error.hpp"

namespace evlog::sim {

// A filled-buffer transfer request: the half-open global sample index range
// the buffer held. Data itself stays in the source stream; the range is the
// chunk's identity.
struct DmaRequest {
  int buffer = 0;          // which ping/pong buffer was filled
  uint64_t begin = 0;      // first sample index in the chunk
  uint64_t end = 0;        // one past the last sample index
};

// Ping-pong pair: samples land in the active buffer; filling it swaps the
// active index and emits a DMA request for the filled one. A buffer under
// DMA is never written: pushing while the (new) active buffer is still busy
// is an overrun fault, raised at a deterministic sample index.
class PingPongBuffer {
 public:
  explicit PingPongBuffer(size_t capacity);

  // Accounts one sample. Returns a request exactly when this push filled
  // the active buffer. Throws SimFault on overrun.
  std::optional<DmaRequest> push();

  // DMA finished for the given buffer; it becomes writable again.
  void complete(int buffer);

  int active() const { return active_; }
  size_t fill() const { return fill_; }
  bool busy(int buffer) const { return busy_[buffer]; }
  size_t capacity() const { return capacity_; }
  uint64_t total_pushed() const { return total_pushed_; }

 private:
  size_t capacity_;
  int active_ = 0;
  size_t fill_ = 0;
  bool busy_[2] = {false, false};
  uint64_t total_pushed_ = 0;
};

}  // namespace evlog::sim
