#pragma once

#include "kfp/assumptions.hpp"
#include "kfp/certificate.hpp"
#include "kfp/certificate_validator.hpp"
#include "kfp/config.hpp"
#include "kfp/errors.hpp"
#include "kfp/expr.hpp"
#include "kfp/geometry.hpp"
#include "kfp/io.hpp"
#include "kfp/jet.hpp"
#include "kfp/linalg.hpp"
#include "kfp/model.hpp"
#include "kfp/relativistic_closed_forms.hpp"
#include "kfp/solver.hpp"
