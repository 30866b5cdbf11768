#include "skillscale/error.hpp"

#include <iostream>
#include <utility>

namespace skillscale {
namespace {

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  sink() = s ? std::move(s) : [](std::string_view) {};
}

void warn(std::string_view message) { sink()(message); }

}  // namespace skillscale
