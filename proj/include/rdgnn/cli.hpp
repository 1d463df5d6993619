// Copyright 2026 The RDGNN Authors.
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

#ifndef RDGNN_CLI_HPP_
#define RDGNN_CLI_HPP_

#include <iosfwd>

namespace rdgnn {

// Exit codes of dispatch().
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal error
inline constexpr int kExitUsage = 2;    // bad flags or config
inline constexpr int kExitInput = 3;    // missing / malformed input file
inline constexpr int kExitNumeric = 4;  // solver, non-finite loss, ...

// Runs one subcommand. Errors are reported on `err` as a single JSON object
// {"error": kind, "message": ..., "violations": [...]}.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace rdgnn

#endif  // RDGNN_CLI_HPP_
