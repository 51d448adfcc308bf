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

#ifndef PGSLAM_ERRORS_HPP_
#define PGSLAM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pgslam {

/// Malformed or unreadable input data (files, streams, configs).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Unrecoverable numerical breakdown (e.g. normal equations unsolvable
/// at maximum damping).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace pgslam

#endif  // PGSLAM_ERRORS_HPP_
