#pragma once

#include "malscan/assets.hpp"
#include "malscan/backend.hpp"
#include "malscan/category.hpp"
#include "malscan/common.hpp"
#include "malscan/componentizer.hpp"
#include "malscan/cvss.hpp"
#include "malscan/language.hpp"
#include "malscan/orchestrator.hpp"
#include "malscan/prescore.hpp"
#include "malscan/report.hpp"
#include "malscan/rule_backend.hpp"
#include "malscan/rules.hpp"
#include "malscan/source_file.hpp"
