#include "partfuse/logits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "partfuse/error.hpp"
#include "partfuse/tensor.hpp"

namespace partfuse {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed", path.string() + ": " + e.what());
  }
}

void check_mapping(const ChannelPlanes& planes, const std::set<std::uint16_t>& expected, const char* what) {
  std::set<std::uint16_t> got(planes.channel_ids.begin(), planes.channel_ids.end());
  if (got.size() != planes.channel_ids.size() || got != expected) {
    throw ValidationError("channel-mapping", std::string(what) +
                                                 " channel order must be a permutation of the taxonomy ids");
  }
}

ChannelPlanes planes_from_tensor(const Tensor& t, std::vector<std::uint16_t> ids, const char* what) {
  if (t.dtype() != DType::f32 || t.rank() != 3) {
    throw ValidationError("bad-shape", std::string(what) + " logits must be a rank-3 f32 tensor");
  }
  ChannelPlanes planes;
  planes.height = t.shape()[1];
  planes.width = t.shape()[2];
  if (ids.size() != t.shape()[0]) {
    throw ValidationError("channel-count", std::string(what) + " logits have " + std::to_string(t.shape()[0]) +
                                               " channels, expected " + std::to_string(ids.size()));
  }
  planes.channel_ids = std::move(ids);
  planes.values = t.to_doubles();
  return planes;
}

Tensor tensor_from_planes(const ChannelPlanes& planes) {
  std::vector<float> values(planes.values.begin(), planes.values.end());
  return Tensor::from_floats(
      {static_cast<std::uint32_t>(planes.channels()), planes.height, planes.width}, std::move(values));
}

}  // namespace

std::size_t ChannelPlanes::channel_of(std::uint16_t id) const {
  auto it = std::find(channel_ids.begin(), channel_ids.end(), id);
  if (it == channel_ids.end()) throw ValidationError("channel-mapping", "no channel for id " + std::to_string(id));
  return static_cast<std::size_t>(it - channel_ids.begin());
}

void validate_stack(const LogitStack& stack, const ClassTaxonomy& taxonomy) {
  const std::size_t n = stack.pixel_count();
  auto check_planes = [&](const ChannelPlanes& planes, const char* what) {
    if (planes.channels() > 0 && (planes.width != stack.width || planes.height != stack.height)) {
      throw ValidationError("dimension-mismatch", std::string(what) + " logits dimensions differ");
    }
    if (planes.values.size() != planes.channels() * n) {
      throw ValidationError("bad-shape", std::string(what) + " logits value count mismatch");
    }
    if (!std::all_of(planes.values.begin(), planes.values.end(), [](double v) { return std::isfinite(v); })) {
      throw ValidationError("non-finite", std::string(what) + " logits contain non-finite values");
    }
  };
  check_planes(stack.semantic, "semantic");
  check_planes(stack.part, "part");

  std::set<std::uint16_t> sem_ids, part_ids;
  for (const auto& c : taxonomy.semantic_classes()) sem_ids.insert(c.id);
  for (const auto& p : taxonomy.part_classes()) part_ids.insert(p.id);
  check_mapping(stack.semantic, sem_ids, "semantic");
  check_mapping(stack.part, part_ids, "part");

  for (const auto& prop : stack.proposals) {
    if (!taxonomy.is_thing(prop.class_id)) {
      throw ValidationError("proposal-class", "proposal class " + std::to_string(prop.class_id) +
                                                  " is not a thing class");
    }
    if (!(prop.confidence >= 0.0 && prop.confidence <= 1.0)) {
      throw ValidationError("proposal-confidence", "proposal confidence outside [0,1]");
    }
    if (prop.mask_logits.size() != n) {
      throw ValidationError("dimension-mismatch", "proposal mask dimensions differ from the logits");
    }
    if (!std::all_of(prop.mask_logits.begin(), prop.mask_logits.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw ValidationError("non-finite", "proposal mask contains non-finite values");
    }
  }
}

StackFiles stack_files_for_stem(const std::filesystem::path& stem) {
  StackFiles files;
  files.semantic_logits = with_suffix(stem, ".sem.ppt");
  if (auto part = with_suffix(stem, ".part.ppt"); std::filesystem::exists(part)) files.part_logits = part;
  if (auto props = with_suffix(stem, ".proposals.json"); std::filesystem::exists(props)) files.proposals = props;
  if (auto channels = with_suffix(stem, ".channels.json"); std::filesystem::exists(channels)) {
    const auto j = read_json(channels);
    try {
      if (j.contains("semantic")) files.semantic_channel_ids = j.at("semantic").get<std::vector<std::uint16_t>>();
      if (j.contains("part")) files.part_channel_ids = j.at("part").get<std::vector<std::uint16_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed", channels.string() + ": " + e.what());
    }
  }
  return files;
}

LogitStack load_stack(const StackFiles& files, const ClassTaxonomy& taxonomy) {
  auto sem_ids = files.semantic_channel_ids;
  if (sem_ids.empty()) {
    for (const auto& c : taxonomy.semantic_classes()) sem_ids.push_back(c.id);
  }
  auto part_ids = files.part_channel_ids;
  if (part_ids.empty()) {
    for (const auto& p : taxonomy.part_classes()) part_ids.push_back(p.id);
  }

  LogitStack stack;
  stack.semantic = planes_from_tensor(read_tensor(files.semantic_logits), std::move(sem_ids), "semantic");
  stack.width = stack.semantic.width;
  stack.height = stack.semantic.height;
  if (!files.part_logits.empty()) {
    stack.part = planes_from_tensor(read_tensor(files.part_logits), std::move(part_ids), "part");
  } else {
    if (!part_ids.empty()) throw IoError("missing-file", "part logits required: taxonomy defines part classes");
    stack.part.width = stack.width;
    stack.part.height = stack.height;
  }

  if (!files.proposals.empty()) {
    const auto j = read_json(files.proposals);
    if (!j.is_array()) throw ValidationError("malformed", files.proposals.string() + ": expected an array");
    const auto base = files.proposals.parent_path();
    for (const auto& entry : j) {
      InstanceProposal prop;
      std::filesystem::path mask_path;
      try {
        prop.class_id = entry.at("class_id").get<ClassId>();
        prop.confidence = entry.at("confidence").get<double>();
        mask_path = entry.at("mask_tensor_path").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed", files.proposals.string() + ": " + e.what());
      }
      const auto mask = read_tensor(mask_path.is_absolute() ? mask_path : base / mask_path);
      if (mask.dtype() != DType::f32 || mask.rank() != 2 || mask.shape()[0] != stack.height ||
          mask.shape()[1] != stack.width) {
        throw ValidationError("dimension-mismatch", "proposal mask must be f32 [H, W] matching the logits");
      }
      prop.mask_logits = mask.to_doubles();
      stack.proposals.push_back(std::move(prop));
    }
  }
  validate_stack(stack, taxonomy);
  return stack;
}

void save_stack(const LogitStack& stack, const std::filesystem::path& stem) {
  write_tensor(tensor_from_planes(stack.semantic), with_suffix(stem, ".sem.ppt"));
  if (stack.part.channels() > 0) write_tensor(tensor_from_planes(stack.part), with_suffix(stem, ".part.ppt"));

  nlohmann::json channels{{"semantic", stack.semantic.channel_ids}, {"part", stack.part.channel_ids}};
  detail::write_text(with_suffix(stem, ".channels.json"), channels.dump(2) + "\n");

  nlohmann::json props = nlohmann::json::array();
  const auto name = stem.filename().string();
  for (std::size_t i = 0; i < stack.proposals.size(); ++i) {
    const auto& prop = stack.proposals[i];
    const auto mask_name = name + ".mask" + std::to_string(i) + ".ppt";
    std::vector<float> values(prop.mask_logits.begin(), prop.mask_logits.end());
    write_tensor(Tensor::from_floats({stack.height, stack.width}, std::move(values)), stem.parent_path() / mask_name);
    props.push_back({{"class_id", prop.class_id}, {"confidence", prop.confidence}, {"mask_tensor_path", mask_name}});
  }
  detail::write_text(with_suffix(stem, ".proposals.json"), props.dump(2) + "\n");
}

}  // namespace partfuse
