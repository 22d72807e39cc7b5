// Copyright 2026  The emokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOKIT_RESOURCES_HPP_
#define EMOKIT_RESOURCES_HPP_

#include <optional>
#include <string_view>

namespace emokit::resources {

// Files under config/ and resources/ compiled into the library, keyed as
// "schemes/<name>", "taxonomies/<name>", "prompts/<name>".
std::optional<std::string_view> Find(std::string_view key);

}  // namespace emokit::resources

#endif  // EMOKIT_RESOURCES_HPP_
