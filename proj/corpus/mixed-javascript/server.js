'use strict';

const express = require('express');
const cookieParser = require('cookie-parser');
const helmet = require('helmet');

const orders = require('./routes/orders');
const files = require('./routes/files');
const profile = require('./routes/profile');

function createApp(db) {
  const app = express();
  app.use(helmet());
  app.use(express.json({ limit: '100kb' }));
  app.use(cookieParser());
  app.use('/orders', orders(db));
  app.use('/files', files());
  app.use('/profile', profile(db));
  app.use((err, req, res, next) => {
    console.error(err);
    res.status(500).json({ error: 'internal error' });
  });
  return app;
}

if (require.main === module) {
  const { openDatabase } = require('./lib/db');
  const port = Number(process.env.PORT || 3000);
  createApp(openDatabase(process.env.DATABASE_URL)).listen(port, () => {
    console.log(`listening on ${port}`);
  });
}

module.exports = { createApp };
