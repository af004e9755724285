#pragma once

#include <stdexcept>
#include <string>

namespace vulnassess {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// --- pdg ---

class MalformedFunction : public Error {
  public:
    explicit MalformedFunction(const std::string &msg) : Error("malformed function: " + msg) {}
};

class UnsupportedConstruct : public Error {
  public:
    UnsupportedConstruct(const std::string &construct, int line)
        : Error("unsupported construct '" + construct + "' at line " + std::to_string(line)),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

class SchemaViolation : public Error {
  public:
    SchemaViolation(const std::string &path, const std::string &msg)
        : Error("schema violation at " + path + ": " + msg), path_(path) {}
    const std::string &path() const { return path_; }

  private:
    std::string path_;
};

// --- slicer ---

class UnknownNode : public Error {
  public:
    explicit UnknownNode(int node) : Error("unknown node id " + std::to_string(node)), node_(node) {}
    int node() const { return node_; }

  private:
    int node_;
};

// --- vir ---

class EmptyCode : public Error {
  public:
    EmptyCode() : Error("code segment is empty") {}
};

class MissingSection : public Error {
  public:
    explicit MissingSection(const std::string &name)
        : Error("missing section '" + name + "'"), name_(name) {}
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class EmptySection : public Error {
  public:
    explicit EmptySection(const std::string &name)
        : Error("empty section '" + name + "'"), name_(name) {}
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class MissingApiKey : public Error {
  public:
    explicit MissingApiKey(const std::string &env)
        : Error("environment variable '" + env + "' does not hold an API key") {}
};

class TransportError : public Error {
  public:
    explicit TransportError(const std::string &msg) : Error("transport error: " + msg) {}
};

class ProviderExhausted : public Error {
  public:
    ProviderExhausted(int attempts, const std::string &last_cause)
        : Error("provider exhausted after " + std::to_string(attempts) +
                " attempts; last cause: " + last_cause) {}
};

// --- assessor ---

class EmptyBank : public Error {
  public:
    EmptyBank() : Error("suggestion bank is empty") {}
};

class PipelineError : public Error {
  public:
    PipelineError(const std::string &stage, const std::string &cause)
        : Error("[stage " + stage + "] " + cause), stage_(stage) {}
    const std::string &stage() const { return stage_; }

  private:
    std::string stage_;
};

// --- trainer ---

class InvalidProbability : public Error {
  public:
    explicit InvalidProbability(double p)
        : Error("probability " + std::to_string(p) + " outside [0,1]") {}
};

class LengthMismatch : public Error {
  public:
    LengthMismatch(size_t a, size_t b)
        : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyDataset : public Error {
  public:
    EmptyDataset() : Error("dataset is empty") {}
};

class NonFiniteLoss : public Error {
  public:
    NonFiniteLoss(int epoch, int batch)
        : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    int batch() const { return batch_; }

  private:
    int epoch_;
    int batch_;
};

// --- dataset ---

class OutOfRange : public Error {
  public:
    explicit OutOfRange(const std::string &msg) : Error("out of range: " + msg) {}
};

class ParseError : public Error {
  public:
    ParseError(int line, const std::string &msg)
        : Error("parse error at line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

class InvariantViolation : public Error {
  public:
    InvariantViolation(const std::string &id, const std::string &field, const std::string &msg)
        : Error("invariant violation on record '" + id + "', field '" + field + "': " + msg),
          field_(field) {}
    const std::string &field() const { return field_; }

  private:
    std::string field_;
};

class EmptySplit : public Error {
  public:
    explicit EmptySplit(const std::string &partition)
        : Error("empty partition '" + partition + "'"), partition_(partition) {}
    const std::string &partition() const { return partition_; }

  private:
    std::string partition_;
};

// --- eval ---

class DegenerateLabels : public Error {
  public:
    DegenerateLabels() : Error("fewer than two distinct true labels") {}
};

} // namespace vulnassess
