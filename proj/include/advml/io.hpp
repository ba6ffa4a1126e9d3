#pragma once

#include <string>

namespace advml {

std::string read_text_file(const std::string& path);
// Writes through a temporary file and rename.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace advml
