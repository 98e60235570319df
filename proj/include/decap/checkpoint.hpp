#pragma once

#include <string>

#include "decap/ppo.hpp"

namespace decap {

// Policy snapshot with enough metadata to validate reuse. `id` is a content
// hash of the serialized text, filled by save/load.
struct Checkpoint {
  int format_version = 1;
  std::string robot_name;
  std::string mode;  // action mode the policy was trained for
  int iterations = 0;
  PolicyParameters policy;
  std::string id;
};

std::string checkpoint_to_text(const Checkpoint& ck);
Checkpoint checkpoint_from_text(const std::string& text, const std::string& where);

// Text layout: header lines, then one `param <name> <rows> <cols>` block per
// tensor with doubles at 17 significant digits. Returns the content id.
std::string save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over the serialized body, as fixed-width hex.
std::string content_id(const std::string& text);

}  // namespace decap
