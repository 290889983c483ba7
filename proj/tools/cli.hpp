#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace streamtf::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,           // bad flags or malformed config file
    kDatasetMissing = 3,
    kCheckpointMismatch = 4,
    kDiverged = 5,
    kInvalidData = 6,     // dataset or stream input fails validation
};

// Environment variable consulted when --data is not given.
inline constexpr const char* kDataEnv = "STREAMTF_DATA";

inline constexpr const char* kBenchCsvHeader = "n,memory,heads,dim,sliding_macs,full_macs,sliding_ms,full_ms";
inline constexpr const char* kSweepCsvHeader = "memory,kernel,tau_min_ms,tau_memory_ms,subjects,mae,acc10,acc15";

std::vector<std::size_t> default_sweep_memories();  // 10, 30, ..., 150
std::vector<std::size_t> default_sweep_kernels();   // 7, 15, 20, 25, 30

// Runs one command line. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace streamtf::cli
