/*
 * Copyright 2024 The Cogstream Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COGSTREAM_COMMON_H_
#define COGSTREAM_COMMON_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cogstream {

// Binary screening target. 'absent' is the default class of a cold model.
enum class Label { kAbsent = 0, kPresent = 1 };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

inline Timestamp from_epoch_seconds(std::int64_t s) {
  return Timestamp(std::chrono::seconds(s));
}
inline std::int64_t to_epoch_seconds(Timestamp t) {
  return t.time_since_epoch().count();
}

// Named sparse vector fed to classifiers. Ordered so that iteration (and
// therefore every learner) is deterministic.
using NamedVector = std::map<std::string, double>;

struct ClassProbabilities {
  double present = 0.5;
  double absent = 0.5;

  double of(Label label) const {
    return label == Label::kPresent ? present : absent;
  }
  // Ties resolve to 'absent', the default class.
  Label argmax() const {
    return present > absent ? Label::kPresent : Label::kAbsent;
  }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace cogstream

#endif  // COGSTREAM_COMMON_H_
