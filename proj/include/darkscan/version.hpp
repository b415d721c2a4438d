#pragma once

namespace darkscan {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr const char* kBundleSchemaVersion = "1.0";
inline constexpr const char* kReportVersion = "1.0";

}  // namespace darkscan
