#pragma once

namespace compaudit {

inline constexpr const char* kToolName = "compaudit";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace compaudit
