/*
 * Copyright 2026 The pgslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PGSLAM_TEXT_HPP_
#define PGSLAM_TEXT_HPP_

#include <string>
#include <vector>

namespace pgslam {

/// Formats a double with 17 significant digits, enough for a lossless
/// text round trip of any IEEE-754 binary64 value.
std::string fmt17(double value);

std::string trim(const std::string& s);

/// Splits on runs of spaces/tabs; no empty fields are produced.
std::vector<std::string> split_fields(const std::string& line);

/// Strict parsers. `context` names the file/line for error messages.
double parse_double(const std::string& token, const std::string& context);
long long parse_int(const std::string& token, const std::string& context);

}  // namespace pgslam

#endif  // PGSLAM_TEXT_HPP_
