#include "kelab/conventions.hpp"

#include "kelab/conventions_text.hpp"
#include "kelab/io.hpp"

namespace kelab {

const std::string& conventions_text()
{
    static const std::string text(detail::kConventionsText);
    return text;
}

const std::string& conventions_hash()
{
    static const std::string h = sha256_hex(conventions_text());
    return h;
}

const char* version() { return "0.1.0"; }

}  // namespace kelab
