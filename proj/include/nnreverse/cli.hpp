// Copyright 2026 The NNReverse Authors. All Rights Reserved.
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

#ifndef NNREVERSE_CLI_HPP_
#define NNREVERSE_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace nnreverse {

// Entry point of the `nnreverse` tool. `args` excludes the program name.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nnreverse

#endif  // NNREVERSE_CLI_HPP_
