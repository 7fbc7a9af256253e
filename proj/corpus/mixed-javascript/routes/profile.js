'use strict';

const express = require('express');
const serialize = require('node-serialize');

module.exports = function profile(db) {
  const router = express.Router();

  router.get('/preferences', (req, res) => {
    const raw = Buffer.from(req.cookies.prefs || '', 'base64').toString();
    const prefs = raw ? serialize.unserialize(raw) : {};
    res.json({ theme: prefs.theme || 'light', pageSize: prefs.pageSize || 20 });
  });

  router.post('/preferences', (req, res) => {
    const prefs = { theme: String(req.body.theme || 'light'), pageSize: Number(req.body.pageSize) || 20 };
    res.cookie('prefs', Buffer.from(JSON.stringify(prefs)).toString('base64'), { httpOnly: true });
    res.status(204).end();
  });

  return router;
};
