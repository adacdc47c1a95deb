// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs every acceptance criterion and prints one line per criterion.
// Exit status is 0 only if all pass.

#include <iostream>

#include "qncf/acceptance.hpp"

int main() {
  bool all = true;
  for (const auto& suite : qncf::acceptance::suites()) {
    const auto result = suite.run();
    std::cout << qncf::acceptance::format_line(result) << std::endl;
    all &= result.pass;
  }
  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? 0 : 1;
}
