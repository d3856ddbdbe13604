// Copyright 2026 The ClusterNS Authors.
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

#ifndef CLUSTERNS_TEXT_IO_HPP_
#define CLUSTERNS_TEXT_IO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clusterns::text {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split(std::string_view line, char sep);

// Value of `key=value` among whitespace separated header tokens.
std::optional<std::string_view> header_field(std::string_view header,
                                             std::string_view key);

}  // namespace clusterns::text

namespace clusterns {

// SplitMix64 finalizer; used to derive independent per-step seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt_a,
                       std::uint64_t salt_b);

}  // namespace clusterns

#endif  // CLUSTERNS_TEXT_IO_HPP_
