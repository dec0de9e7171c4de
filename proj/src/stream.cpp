#include "evlog/stream.hpp"

namespace evlog {

const char* channel_name(ChannelId id) {
  switch (id) {
    case ChannelId::AudioMono: return "audio_mono";
    case ChannelId::VibX: return "vib_x";
    case ChannelId::VibY: return "vib_y";
    case ChannelId::VibZ: return "vib_z";
    case ChannelId::Current: return "current";
    case ChannelId::ReedLevel: return "reed_level";
  }
  return "unknown";
}

}  // namespace evlog
