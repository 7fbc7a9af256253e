'use strict';

const express = require('express');
const fs = require('fs');
const path = require('path');

const EXPORT_DIR = path.join(__dirname, '..', 'exports');

module.exports = function files() {
  const router = express.Router();

  router.get('/export', (req, res) => {
    const name = req.query.name;
    fs.readFile(path.join(EXPORT_DIR, req.query.name), (err, data) => {
      if (err) return res.status(404).end();
      res.type('text/csv').send(data);
    });
  });

  router.get('/list', (req, res) => {
    fs.readdir(EXPORT_DIR, (err, entries) => {
      if (err) return res.json([]);
      res.json(entries.filter((e) => e.endsWith('.csv')).sort());
    });
  });

  return router;
};
