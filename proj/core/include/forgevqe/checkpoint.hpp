#pragma once

#include <string>

#include "forgevqe/forge.hpp"

namespace fvqe {

/// Versioned, checksummed JSON serialization of an engine snapshot. A resumed
/// run continues the trace exactly as the unbroken run would.
std::string checkpoint_json(const EngineSnapshot& snapshot);
void save_checkpoint(const EngineSnapshot& snapshot, const std::string& path);

/// Throws on version mismatch or checksum failure; never returns partial data.
EngineSnapshot load_checkpoint(const std::string& path);
EngineSnapshot parse_checkpoint(const std::string& json_text);

}  // namespace fvqe
