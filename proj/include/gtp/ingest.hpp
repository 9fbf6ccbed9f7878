#pragma once

// Bit-stream ingestion: turns external randomness into a Path so any
// strategy can be run against it. 0 maps to -1 and 1 to +1; raw streams are
// read most-significant-bit first within each byte.

#include <istream>
#include <stdexcept>
#include <string>

#include "gtp/game.hpp"

namespace gtp {

enum class BitFormat { ascii01, raw_bits };

inline BitFormat bit_format_from_string(const std::string& s) {
  if (s == "ascii01") return BitFormat::ascii01;
  if (s == "raw" || s == "raw_bits") return BitFormat::raw_bits;
  throw std::invalid_argument("unknown bit format: " + s);
}

inline Path ingest_bits(std::istream& in, BitFormat format) {
  Path p;
  if (format == BitFormat::ascii01) {
    char c;
    while (in.get(c)) {
      if (c == '0')
        p.push(-1);
      else if (c == '1')
        p.push(1);
      else if (c == ' ' || c == '\n' || c == '\r' || c == '\t')
        continue;
      else
        throw std::invalid_argument(std::string("ingest_bits: invalid character '") +
                                    c + "' in ascii01 stream");
    }
  } else {
    char byte;
    while (in.get(byte)) {
      const unsigned char b = static_cast<unsigned char>(byte);
      for (int bit = 7; bit >= 0; --bit) p.push((b >> bit) & 1 ? 1 : -1);
    }
  }
  if (p.rounds() == 0) throw std::invalid_argument("ingest_bits: empty stream");
  return p;
}

}  // namespace gtp
