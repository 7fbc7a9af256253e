package server

import (
	"fmt"
	"net/http"
)

type Server struct {
	addr string
	mux  *http.ServeMux
}

func New(addr string) *Server {
	return &Server{addr: addr, mux: http.NewServeMux()}
}

func (s *Server) Handle(path string, h http.HandlerFunc) {
	s.mux.HandleFunc(path, h)
}

func (s *Server) Run() error {
	fmt.Printf("listening on %s {\n", s.addr)
	return http.ListenAndServe(s.addr, s.mux)
}
