// Copyright 2026 The mgtdetect Authors
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

#include <string>
#include <string_view>

namespace mgtd::svg {

/// Minimal SVG writer. Coordinates are printed with two decimals so output
/// bytes depend only on the drawn values.
class Canvas {
 public:
  Canvas(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill, double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, std::string_view stroke = "#333333", double width = 1.0);
  void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "start",
            std::string_view fill = "#222222");
  void text_rotated(double x, double y, std::string_view content, double degrees, double size = 12.0);

  std::string finish() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

std::string escape(std::string_view text);

/// Largest "nice" axis bound >= value (1, 2 or 5 times a power of ten).
double nice_ceiling(double value);

}  // namespace mgtd::svg
