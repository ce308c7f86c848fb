#pragma once

#include "binio.hpp"
#include "diam/target.hpp"

// Stream-level target serialization shared by the target file and the
// checkpoint, which embeds the target.

namespace diam {

void write_target(binio::Writer& w, const Target& t);
Target read_target(binio::Reader& r);

}  // namespace diam
