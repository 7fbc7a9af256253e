'use strict';

const express = require('express');
const { requireInt } = require('../lib/validate');

module.exports = function orders(db) {
  const router = express.Router();

  router.get('/:id', async (req, res, next) => {
    try {
      const id = requireInt(req.params.id);
      const rows = await db.query('SELECT id, status, total FROM orders WHERE id = $1', [id]);
      if (rows.length === 0) return res.status(404).end();
      res.json(rows[0]);
    } catch (err) {
      next(err);
    }
  });

  router.get('/', async (req, res, next) => {
    try {
      const status = req.query.status || 'open';
      const sort = req.query.sort || 'created_at';
      const rows = await db.query(`SELECT id, status, total FROM orders WHERE status = '${status}' ORDER BY ${sort}`);
      res.json(rows);
    } catch (err) {
      next(err);
    }
  });

  return router;
};
