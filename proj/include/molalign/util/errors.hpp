#pragma once

#include <stdexcept>
#include <string>

namespace molalign {

// Base for every library error. `category()` is the short machine-readable
// tag the CLI prints in its "error: <category>: <message>" line.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string &message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string &category() const noexcept { return category_; }

private:
  std::string category_;
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string &message) : Error("parse", message) {}
};

class ValueError : public Error {
public:
  explicit ValueError(const std::string &message) : Error("value", message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string &message) : Error("io", message) {}
};

class LlmError : public Error {
public:
  explicit LlmError(const std::string &message) : Error("llm", message) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string &message) : Error("config", message) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string &message) : Error("numeric", message) {}
};

// Runs fn, prefixing any library error with ctx while keeping its concrete
// type so the CLI category survives.
template <typename Fn> auto with_context(const std::string &ctx, Fn &&fn) {
  try {
    return fn();
  } catch (const ParseError &e) {
    throw ParseError(ctx + e.what());
  } catch (const ValueError &e) {
    throw ValueError(ctx + e.what());
  } catch (const IoError &e) {
    throw IoError(ctx + e.what());
  } catch (const LlmError &e) {
    throw LlmError(ctx + e.what());
  } catch (const ConfigError &e) {
    throw ConfigError(ctx + e.what());
  } catch (const NumericError &e) {
    throw NumericError(ctx + e.what());
  } catch (const Error &e) {
    throw Error(e.category(), ctx + e.what());
  }
}

} // namespace molalign
