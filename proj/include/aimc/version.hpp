/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

namespace aimc {

inline constexpr const char* kVersion = "0.2.0";

// Bumped whenever the on-disk layout of snapshots / configs / fixtures changes.
inline constexpr int kSnapshotFormatVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kFixtureFormatVersion = 1;

}  // namespace aimc
