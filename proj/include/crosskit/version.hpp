#pragma once

namespace crosskit {

inline constexpr char kVersion[] = "0.1.0";

}  // namespace crosskit
