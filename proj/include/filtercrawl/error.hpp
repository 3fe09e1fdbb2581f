#pragma once

#include <stdexcept>
#include <string>

namespace filtercrawl {

/// Malformed input: bad domain names, URLs, rule files, world documents.
class InvalidInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Configuration that cannot be used to start a run.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or socket setup failure.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The run cannot proceed (e.g. resolvers unreachable). State was persisted.
class RunAborted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace filtercrawl
