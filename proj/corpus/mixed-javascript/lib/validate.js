'use strict';

class ValidationError extends Error {
  constructor(message) {
    super(message);
    this.status = 400;
  }
}

function requireInt(value, { min = 1, max = Number.MAX_SAFE_INTEGER } = {}) {
  const n = Number.parseInt(String(value), 10);
  if (!Number.isSafeInteger(n) || n < min || n > max) {
    throw new ValidationError(`expected an integer between ${min} and ${max}`);
  }
  return n;
}

function requireOneOf(value, allowed) {
  if (!allowed.includes(value)) {
    throw new ValidationError(`expected one of ${allowed.join(', ')}`);
  }
  return value;
}

function escapeHtml(text) {
  return String(text)
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

module.exports = { ValidationError, requireInt, requireOneOf, escapeHtml };
