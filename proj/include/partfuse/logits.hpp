#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "partfuse/taxonomy.hpp"

namespace partfuse {

/// Channel-major real planes [channels x H x W] with an explicit mapping from
/// channel index to class id.
struct ChannelPlanes {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint16_t> channel_ids;  // channel index -> class/part id
  std::vector<double> values;              // channel-major, row-major inside

  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::size_t channels() const noexcept { return channel_ids.size(); }

  std::span<double> plane(std::size_t channel) {
    return std::span(values).subspan(channel * plane_size(), plane_size());
  }
  std::span<const double> plane(std::size_t channel) const {
    return std::span(values).subspan(channel * plane_size(), plane_size());
  }
  /// Channel index holding `id`; throws ValidationError when absent.
  std::size_t channel_of(std::uint16_t id) const;
};

struct InstanceProposal {
  ClassId class_id = 0;
  double confidence = 0.0;
  std::vector<double> mask_logits;  // full frame, H x W
};

/// Network-agnostic head outputs: semantic logits, part logits and instance
/// proposals for one image.
struct LogitStack {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  ChannelPlanes semantic;
  ChannelPlanes part;
  std::vector<InstanceProposal> proposals;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
};

/// Checks channel counts and mappings against the taxonomy, dimensions,
/// proposal classes (must be things) and finiteness. Throws ValidationError.
void validate_stack(const LogitStack& stack, const ClassTaxonomy& taxonomy);

/// Files making up one fusion input. Channel ids default to taxonomy order.
struct StackFiles {
  std::filesystem::path semantic_logits;  // PPT1 f32 [C_sem, H, W]
  std::filesystem::path part_logits;      // PPT1 f32 [C_part, H, W]; may be empty when no parts
  std::filesystem::path proposals;        // JSON sidecar; may be empty
  std::vector<std::uint16_t> semantic_channel_ids;
  std::vector<std::uint16_t> part_channel_ids;
};

/// Resolves the conventional layout around a stem:
/// `<stem>.sem.ppt`, `<stem>.part.ppt`, `<stem>.proposals.json` and an
/// optional `<stem>.channels.json` ({"semantic": [...], "part": [...]}).
StackFiles stack_files_for_stem(const std::filesystem::path& stem);

/// Loads and validates a stack. Proposal sidecar: JSON array of
/// {class_id, confidence, mask_tensor_path}, paths relative to the sidecar.
LogitStack load_stack(const StackFiles& files, const ClassTaxonomy& taxonomy);

/// Writes a stack in the layout understood by stack_files_for_stem().
void save_stack(const LogitStack& stack, const std::filesystem::path& stem);

}  // namespace partfuse
