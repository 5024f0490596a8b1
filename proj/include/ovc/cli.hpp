// Copyright 2026 The ovc Authors.
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

#pragma once

#include "ovc/common.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace ovc {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIngestion = 3,
  kExitNumeric = 4,
  kExitLoad = 5,
  kExitSize = 6,
};

int exit_code_for(ErrorKind kind);

/// args excludes the program name. Never throws; errors become exit codes
/// with a message on err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ovc
