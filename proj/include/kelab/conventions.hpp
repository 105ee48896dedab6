#pragma once

#include <string>

namespace kelab {

const std::string& conventions_text();
// SHA-256 of the conventions document, recorded in every manifest
const std::string& conventions_hash();
const char* version();

}  // namespace kelab
