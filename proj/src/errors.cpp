#include "njr/errors.hpp"

namespace njr {

const char* err_code_name(ErrCode code) {
  switch (code) {
    case ErrCode::ForbiddenVar: return "ForbiddenVar";
    case ErrCode::UndefinedVar: return "UndefinedVar";
    case ErrCode::DanglingRef: return "DanglingRef";
    case ErrCode::BadLabel: return "BadLabel";
    case ErrCode::TypeError: return "TypeError";
    case ErrCode::EvalError: return "EvalError";
  }
  return "TypeError";
}

ErrCode err_code_from_name(const std::string& name) {
  if (name == "ForbiddenVar") return ErrCode::ForbiddenVar;
  if (name == "UndefinedVar") return ErrCode::UndefinedVar;
  if (name == "DanglingRef") return ErrCode::DanglingRef;
  if (name == "BadLabel") return ErrCode::BadLabel;
  if (name == "TypeError") return ErrCode::TypeError;
  if (name == "EvalError") return ErrCode::EvalError;
  throw std::runtime_error("unknown error code: " + name);
}

const char* run_error_class_name(RunErrorClass cls) {
  switch (cls) {
    case RunErrorClass::Parse: return "parse";
    case RunErrorClass::Runtime: return "runtime";
    case RunErrorClass::Budget: return "budget";
    case RunErrorClass::Timeout: return "timeout";
    case RunErrorClass::Agent: return "agent";
  }
  return "runtime";
}

int exit_code_for(RunErrorClass cls) {
  switch (cls) {
    case RunErrorClass::Parse: return 2;
    case RunErrorClass::Runtime: return 3;
    case RunErrorClass::Budget: return 4;
    case RunErrorClass::Timeout: return 5;
    case RunErrorClass::Agent: return 6;
  }
  return 3;
}

}  // namespace njr
